/* tslint:disable */
/* eslint-disable */

/**
 * MAW and effort by level across an evenly spaced eta grid.
 */
export function eta_curve(treatment: string, k_linear: number, k_quad: number, eta_max: number, steps: number): string;

/**
 * Simulates all four treatments and returns effort-pattern shares.
 */
export function simulate_patterns(reciprocal: number, selfish: number, eta: number, tremble: number, seed: bigint): string;

/**
 * Equilibrium schedules for one treatment as JSON.
 */
export function solve_equilibrium(treatment: string, eta: number, k_linear: number, k_quad: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly eta_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly simulate_patterns: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly solve_equilibrium: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
