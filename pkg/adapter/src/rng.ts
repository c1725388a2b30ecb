/**
 * SplitMix64 — the same pinned generator the toolkit's reference network
 * uses, so weight initialization is reproducible across implementations.
 */

const MASK = (1n << 64n) - 1n;

export class SplitMix64 {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & MASK;
  }

  nextU64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & MASK;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK;
    return z ^ (z >> 31n);
  }

  /** Uniform in [-0.5, 0.5). */
  uniform(): number {
    return Number(this.nextU64() >> 11n) * 2 ** -53 - 0.5;
  }

  /** Uniform in [lo, hi). */
  range(lo: number, hi: number): number {
    return lo + (this.uniform() + 0.5) * (hi - lo);
  }

  fill(n: number, lo = -0.5, hi = 0.5): Float32Array {
    const out = new Float32Array(n);
    for (let i = 0; i < n; i++) out[i] = this.range(lo, hi);
    return out;
  }

  /** Deterministic Fisher-Yates shuffle (in place). */
  shuffle<T>(items: T[]): T[] {
    for (let i = items.length - 1; i > 0; i--) {
      const j = Number(this.nextU64() % BigInt(i + 1));
      [items[i], items[j]] = [items[j], items[i]];
    }
    return items;
  }
}
