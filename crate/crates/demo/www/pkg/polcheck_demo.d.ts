/* tslint:disable */
/* eslint-disable */

/**
 * Decides whether the event in `content` is covered by `consent`, both as
 * log entries or bare JSON, under the built-in vocabulary extended by
 * `taxonomy`.
 */
export function check(taxonomy: string, content: string, consent: string): string;

/**
 * Where each key lands among `partitions`, and which of `consumers`
 * group members owns each partition. `keys` is whitespace separated.
 */
export function partition_view(keys: string, partitions: number, consumers: number): string;

/**
 * Simulated p50/p75/p95 per window for `users` subjects each emitting one
 * event every `rate_ms` for `seconds`, served by `checkers` in `service_us`
 * per event. Latency grows without bound once arrivals outpace service.
 */
export function queue_curve(users: number, rate_ms: number, seconds: number, service_us: number, checkers: number, window: number): string;

/**
 * Default inputs for the page: the BeFit taxonomy, one gathering event and
 * the collection consent it falls under.
 */
export function sample_inputs(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly check: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly partition_view: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly queue_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly sample_inputs: () => [number, number];
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
