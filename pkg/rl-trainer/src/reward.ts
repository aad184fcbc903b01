/**
 * Cosine-similarity reward between a predicted stage sequence and the
 * ground-truth sequence: R = sum(pi_i * eta_i) / max(|pi| * |eta|, eps).
 * The eps guard keeps the ratio defined when either vector is all-zero
 * (e.g. every node on stage 0), in which case R is 0.
 */

export const DEFAULT_EPSILON = 1e-8;

export function cosineReward(pi: number[], eta: number[], epsilon: number = DEFAULT_EPSILON): number {
  if (pi.length !== eta.length) {
    throw new Error(`length mismatch: ${pi.length} vs ${eta.length}`);
  }
  if (epsilon <= 0) throw new Error('epsilon must be > 0');
  let dot = 0;
  let nPi = 0;
  let nEta = 0;
  for (let i = 0; i < pi.length; i++) {
    dot += pi[i] * eta[i];
    nPi += pi[i] * pi[i];
    nEta += eta[i] * eta[i];
  }
  return dot / Math.max(Math.sqrt(nPi * nEta), epsilon);
}
