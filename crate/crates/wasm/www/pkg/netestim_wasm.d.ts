/* tslint:disable */
/* eslint-disable */

/**
 * Bound surfaces: the loss factor against the drop probability and the
 * variance-shrink factor against the contraction budget.
 */
export function bounds_demo(n: number, m: number, gamma_spectral: number, sigma2: number): string;

/**
 * One seeded tracking trial; node traces for the chosen estimator plus
 * the MSE of every estimator.
 */
export function simulation_demo(freq_scale: number, q: number, seed: number, estimator: string, steps: number): string;

/**
 * Build a graph, solve the caps, and describe both for rendering.
 */
export function topology_demo(family: string, n: number, seed: number, gamma_spectral: number, theta_mode: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bounds_demo: (a: number, b: number, c: number, d: number) => [number, number];
    readonly simulation_demo: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly topology_demo: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
