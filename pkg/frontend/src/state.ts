// Pure playground state transitions; the DOM layer stays thin so these
// can be unit-tested without a browser.

export interface Suggestion {
  token: string;
  score: number;
  rank: number;
}

export interface CompletionResponse {
  suggestions: Suggestion[];
  class_name: string | null;
  latency_ms: number;
  fallback_flags: string[];
}

export interface PlaygroundState {
  buffer: string;
  cursor: number;           // UTF-16 index; converted to bytes at the API edge
  requestId: number;        // 0 = no request in flight
  requestCursor: number;
  panel: Suggestion[] | null;
  selected: number;
  error: string | null;
  endpoint: string;
}

export function initialState(endpoint: string): PlaygroundState {
  return {
    buffer: "",
    cursor: 0,
    requestId: 0,
    requestCursor: -1,
    panel: null,
    selected: 0,
    error: null,
    endpoint,
  };
}

export function editBuffer(
  state: PlaygroundState, buffer: string, cursor: number,
): PlaygroundState {
  // Any edit invalidates the panel and orphans an in-flight request.
  return { ...state, buffer, cursor, panel: null, selected: 0 };
}

export function isTriggerPosition(state: PlaygroundState): boolean {
  return state.cursor > 0 && state.buffer[state.cursor - 1] === ".";
}

export function beginRequest(
  state: PlaygroundState, id: number,
): PlaygroundState {
  return { ...state, requestId: id, requestCursor: state.cursor, error: null };
}

export function applyResponse(
  state: PlaygroundState, id: number, response: CompletionResponse,
): PlaygroundState {
  if (id !== state.requestId || state.cursor !== state.requestCursor) {
    return state;             // stale: issued for an older cursor position
  }
  return {
    ...state,
    requestId: 0,
    panel: response.suggestions,
    selected: 0,
    error: null,
  };
}

export function applyError(
  state: PlaygroundState, id: number, message: string,
): PlaygroundState {
  if (id !== state.requestId) {
    return state;
  }
  return { ...state, requestId: 0, panel: null, error: message };
}

export function moveSelection(
  state: PlaygroundState, delta: number,
): PlaygroundState {
  if (!state.panel || state.panel.length === 0) {
    return state;
  }
  const n = state.panel.length;
  const selected = (state.selected + delta + n) % n;
  return { ...state, selected };
}

export function insertSelected(state: PlaygroundState): PlaygroundState {
  if (!state.panel || state.panel.length === 0) {
    return state;
  }
  const token = state.panel[state.selected].token;
  const buffer =
    state.buffer.slice(0, state.cursor) + token +
    state.buffer.slice(state.cursor);
  return {
    ...state,
    buffer,
    cursor: state.cursor + token.length,
    panel: null,
    selected: 0,
  };
}

export function dismissPanel(state: PlaygroundState): PlaygroundState {
  return { ...state, panel: null, selected: 0, requestId: 0 };
}

export function utf8ByteOffset(text: string, utf16Index: number): number {
  return new TextEncoder().encode(text.slice(0, utf16Index)).length;
}

export class Debouncer {
  private handle: ReturnType<typeof setTimeout> | null = null;

  constructor(private readonly delayMs: number) {}

  schedule(fn: () => void): void {
    this.cancel();
    this.handle = setTimeout(() => {
      this.handle = null;
      fn();
    }, this.delayMs);
  }

  cancel(): void {
    if (this.handle !== null) {
      clearTimeout(this.handle);
      this.handle = null;
    }
  }
}
