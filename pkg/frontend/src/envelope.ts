/**
 * Envelope of a decaying oscillation: the piecewise-linear curve through
 * the local maxima of |values|.  Built from the extrema themselves, so it
 * passes exactly through the samples it interpolates and never dips below
 * them there.
 */

export interface EnvelopeNode {
  t: number;
  value: number;
}

export function localExtremaEnvelope(times: number[], values: number[]): EnvelopeNode[] {
  if (times.length !== values.length) {
    throw new Error(`envelope: ${times.length} times vs ${values.length} values`);
  }
  if (times.length < 3) {
    throw new Error("envelope: need at least 3 samples");
  }
  const a = values.map(Math.abs);
  const nodes: EnvelopeNode[] = [];
  if (a[0] >= a[1]) nodes.push({ t: times[0], value: a[0] });
  for (let i = 1; i < a.length - 1; i++) {
    if (a[i] >= a[i - 1] && a[i] >= a[i + 1]) {
      nodes.push({ t: times[i], value: a[i] });
    }
  }
  if (a[a.length - 1] >= a[a.length - 2]) {
    nodes.push({ t: times[times.length - 1], value: a[a.length - 1] });
  }
  if (nodes.length === 0) {
    let k = 0;
    for (let i = 1; i < a.length; i++) if (a[i] > a[k]) k = i;
    nodes.push({ t: times[k], value: a[k] });
  }
  return nodes;
}
