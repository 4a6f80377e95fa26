/** Truth-table helpers mirroring the engine's conventions.
 *
 * A table of an n-input function is 2^n bits, row k giving the output for
 * the assignment whose binary expansion is k (input 1 = least significant
 * bit).  Hex strings are most-significant-digit first.  Tables here are
 * plain 0/1 number arrays (row order), the form the model consumes.
 */

export type Bits = number[];

export function tableWidth(n: number): number {
  return 1 << n;
}

export function hexToBits(hex: string, n: number): Bits {
  const width = tableWidth(n);
  const digits = Math.max(1, width / 4);
  if (hex.length !== digits || !/^[0-9a-fA-F]+$/.test(hex)) {
    throw new Error(`bad hex table ${hex} for n=${n}`);
  }
  const value = BigInt(`0x${hex}`);
  if (value >= 1n << BigInt(width)) {
    throw new Error(`hex table ${hex} wider than 2^${n} rows`);
  }
  const bits: Bits = new Array(width);
  for (let k = 0; k < width; k++) {
    bits[k] = Number((value >> BigInt(k)) & 1n);
  }
  return bits;
}

export function bitsToHex(bits: Bits): string {
  let value = 0n;
  for (let k = bits.length - 1; k >= 0; k--) {
    value = (value << 1n) | BigInt(bits[k] & 1);
  }
  const digits = Math.max(1, bits.length / 4);
  return value.toString(16).toUpperCase().padStart(digits, "0");
}

export function projection(i: number, n: number): Bits {
  const width = tableWidth(n);
  const bits: Bits = new Array(width);
  for (let k = 0; k < width; k++) {
    bits[k] = (k >> (i - 1)) & 1;
  }
  return bits;
}

export function negate(bits: Bits): Bits {
  return bits.map((b) => b ^ 1);
}

/** AND under one of the four fanin-polarity patterns (1..4). */
export function andTables(a: Bits, b: Bits, eps: number): Bits {
  const ia = eps === 2 || eps === 4 ? 1 : 0;
  const ib = eps === 3 || eps === 4 ? 1 : 0;
  return a.map((av, k) => (av ^ ia) & (b[k] ^ ib));
}

export function permuteRows(bits: Bits, sigma: number[]): Bits {
  return sigma.map((src) => bits[src]);
}

export type ActionTriple = [number, number, number]; // [eps, p1, p2]

/** Node tables (inputs then gates, id order) reconstructed from actions. */
export function replayTables(n: number, actions: ActionTriple[]): Bits[] {
  const tables: Bits[] = [];
  for (let i = 1; i <= n; i++) {
    tables.push(projection(i, n));
  }
  for (const [eps, p1, p2] of actions) {
    tables.push(andTables(tables[p1 - 1], tables[p2 - 1], eps));
  }
  return tables;
}

/** Flat index into the 4*V*V action tensor, matching the engine. */
export function encodeAction(eps: number, p1: number, p2: number, v: number): number {
  return (eps - 1) * v * v + (p1 - 1) * v + (p2 - 1);
}

export function decodeAction(idx: number, v: number): ActionTriple {
  const eps = Math.floor(idx / (v * v)) + 1;
  const rest = idx % (v * v);
  const p1 = Math.floor(rest / v) + 1;
  const p2 = (rest % v) + 1;
  return [eps, p1, p2];
}
