/**
 * Trajectory CSV ingestion.
 *
 * The simulator writes RFC 4180 files with the fixed header
 * `t,sigma_x,sigma_y,sigma_z,case_label`; rows are grouped by case and
 * ordered in time within each case.  Parsing is strict: a wrong header,
 * a short row or a non-numeric value fails with the row number.
 */

export interface TrajectoryPoint {
  t: number;
  sx: number;
  sy: number;
  sz: number;
}

export type CaseSeries = Map<string, TrajectoryPoint[]>;

export const TRAJECTORY_HEADER = ["t", "sigma_x", "sigma_y", "sigma_z", "case_label"];

/** Split one RFC 4180 document into rows of fields (handles quoted fields). */
export function splitCsv(text: string): string[][] {
  const rows: string[][] = [];
  let field = "";
  let row: string[] = [];
  let quoted = false;
  for (let i = 0; i < text.length; i++) {
    const ch = text[i];
    if (quoted) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      row.push(field);
      field = "";
    } else if (ch === "\n" || ch === "\r") {
      if (ch === "\r" && text[i + 1] === "\n") i++;
      row.push(field);
      rows.push(row);
      field = "";
      row = [];
    } else {
      field += ch;
    }
  }
  if (field.length > 0 || row.length > 0) {
    row.push(field);
    rows.push(row);
  }
  // trailing blank line from a final newline
  return rows.filter((r) => !(r.length === 1 && r[0] === ""));
}

/** Parse a trajectory CSV into per-case series, preserving case order. */
export function parseTrajectoryCsv(text: string, source = "<csv>"): CaseSeries {
  const rows = splitCsv(text);
  if (rows.length === 0) {
    throw new Error(`${source}: empty CSV document`);
  }
  const header = rows[0];
  if (header.join(",") !== TRAJECTORY_HEADER.join(",")) {
    throw new Error(
      `${source}: unexpected header [${header.join(",")}], ` +
        `expected [${TRAJECTORY_HEADER.join(",")}]`
    );
  }
  if (rows.length === 1) {
    throw new Error(`${source}: no data rows`);
  }
  const series: CaseSeries = new Map();
  for (let i = 1; i < rows.length; i++) {
    const r = rows[i];
    if (r.length !== 5) {
      throw new Error(`${source}: row ${i + 1} has ${r.length} fields, expected 5`);
    }
    const nums = r.slice(0, 4).map(Number);
    if (nums.some((v) => !Number.isFinite(v))) {
      throw new Error(`${source}: row ${i + 1} contains a non-numeric value`);
    }
    const label = r[4];
    if (!series.has(label)) series.set(label, []);
    series.get(label)!.push({ t: nums[0], sx: nums[1], sy: nums[2], sz: nums[3] });
  }
  return series;
}
