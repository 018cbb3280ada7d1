#!/usr/bin/env node
/**
 * render-figures --in <dir> --out <dir> [--format svg|png] [--styles <json>]
 *
 * Renders every trajectory CSV found in the input directory into a
 * three-panel figure.  CSVs with a different header (e.g. quasienergy
 * sweeps) are skipped with a note.  PNG output rasterises the SVG via
 * @resvg/resvg-js when that optional dependency is installed.
 */

import { readdirSync, readFileSync, mkdirSync, writeFileSync } from "node:fs";
import { basename, join } from "node:path";

import { TRAJECTORY_HEADER, splitCsv } from "./csv.js";
import { CaseStyle, DEFAULT_STYLES, FigureSpec, render } from "./figure.js";

interface Args {
  inDir: string;
  outDir: string;
  format: "svg" | "png";
  stylesFile?: string;
}

function parseArgs(argv: string[]): Args {
  let inDir: string | undefined;
  let outDir: string | undefined;
  let format: "svg" | "png" = "svg";
  let stylesFile: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--in") inDir = argv[++i];
    else if (a === "--out") outDir = argv[++i];
    else if (a === "--format") {
      const f = argv[++i];
      if (f !== "svg" && f !== "png") throw new Error(`--format must be svg or png, got '${f}'`);
      format = f;
    } else if (a === "--styles") stylesFile = argv[++i];
    else throw new Error(`unknown argument '${a}'`);
  }
  if (!inDir || !outDir) throw new Error("usage: render-figures --in <dir> --out <dir> [--format svg|png]");
  return { inDir, outDir, format, stylesFile };
}

function isTrajectoryCsv(path: string): boolean {
  const head = readFileSync(path, "utf-8").slice(0, 256);
  const first = splitCsv(head.split(/\r?\n/)[0] ?? "")[0] ?? [];
  return first.join(",") === TRAJECTORY_HEADER.join(",");
}

async function toPng(svg: string, outPath: string): Promise<void> {
  let resvg: typeof import("@resvg/resvg-js");
  try {
    resvg = await import("@resvg/resvg-js");
  } catch {
    throw new Error("png output needs the optional dependency @resvg/resvg-js (npm install)");
  }
  const rendered = new resvg.Resvg(svg, { fitTo: { mode: "width", value: 1560 } });
  writeFileSync(outPath, rendered.render().asPng());
}

export async function main(argv: string[]): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  try {
    const styles: Record<string, CaseStyle> = { ...DEFAULT_STYLES };
    if (args.stylesFile) {
      Object.assign(styles, JSON.parse(readFileSync(args.stylesFile, "utf-8")));
    }
    const csvs = readdirSync(args.inDir)
      .filter((f) => f.endsWith(".csv"))
      .map((f) => join(args.inDir, f))
      .filter((p) => {
        if (isTrajectoryCsv(p)) return true;
        console.error(`skipping ${p}: not a trajectory CSV`);
        return false;
      });
    if (csvs.length === 0) {
      console.error(`no trajectory CSVs found in ${args.inDir}`);
      return 2;
    }
    mkdirSync(args.outDir, { recursive: true });
    for (const csv of csvs) {
      const stem = basename(csv).replace(/\.csv$/, "");
      const svgPath = join(args.outDir, `${stem}.svg`);
      const spec: FigureSpec = {
        csvPaths: [csv],
        outputPath: svgPath,
        styles,
        title: stem,
      };
      const svg = render(spec);
      if (args.format === "png") {
        await toPng(svg, join(args.outDir, `${stem}.png`));
      }
      console.log(`rendered ${stem}.${args.format}`);
    }
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(basename(process.argv[1]));
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
