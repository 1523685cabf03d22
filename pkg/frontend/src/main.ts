import { fetchHealth, requestCompletion } from "./client.js";
import {
  Debouncer,
  PlaygroundState,
  applyError,
  applyResponse,
  beginRequest,
  dismissPanel,
  editBuffer,
  initialState,
  insertSelected,
  isTriggerPosition,
  moveSelection,
} from "./state.js";

const TRIGGER_DEBOUNCE_MS = 150;

const editor = document.getElementById("editor") as HTMLTextAreaElement;
const panel = document.getElementById("panel") as HTMLUListElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const endpointInput = document.getElementById("endpoint") as HTMLInputElement;
const modelBadge = document.getElementById("model") as HTMLSpanElement;

let state: PlaygroundState = initialState(endpointInput.value);
let nextRequestId = 1;
const debouncer = new Debouncer(TRIGGER_DEBOUNCE_MS);

function render(): void {
  banner.textContent = state.error ?? "";
  banner.style.display = state.error ? "block" : "none";
  if (!state.panel || state.panel.length === 0) {
    panel.style.display = "none";
    panel.replaceChildren();
    return;
  }
  const items = state.panel.map((s, i) => {
    const li = document.createElement("li");
    li.textContent = `${s.rank}. ${s.token}  (${s.score.toFixed(3)})`;
    if (i === state.selected) {
      li.classList.add("selected");
    }
    li.addEventListener("mousedown", (ev) => {
      ev.preventDefault();
      state = insertSelected({ ...state, selected: i });
      syncEditor();
      render();
    });
    return li;
  });
  panel.replaceChildren(...items);
  panel.style.display = "block";
}

function syncEditor(): void {
  editor.value = state.buffer;
  editor.selectionStart = editor.selectionEnd = state.cursor;
  editor.focus();
}

function issueRequest(): void {
  if (!isTriggerPosition(state)) {
    return;
  }
  const id = nextRequestId++;
  state = beginRequest(state, id);
  requestCompletion(state.endpoint, state.buffer, state.cursor, 5)
    .then((response) => {
      state = applyResponse(state, id, response);
      render();
    })
    .catch((err) => {
      state = applyError(state, id, String(err));
      render();
    });
}

editor.addEventListener("input", () => {
  state = editBuffer(state, editor.value, editor.selectionStart ?? 0);
  render();
  if (isTriggerPosition(state)) {
    debouncer.schedule(issueRequest);
  } else {
    debouncer.cancel();
  }
});

editor.addEventListener("keydown", (ev) => {
  if (!state.panel) {
    return;
  }
  if (ev.key === "ArrowDown" || ev.key === "ArrowUp") {
    ev.preventDefault();
    state = moveSelection(state, ev.key === "ArrowDown" ? 1 : -1);
    render();
  } else if (ev.key === "Enter" || ev.key === "Tab") {
    ev.preventDefault();
    state = insertSelected(state);
    syncEditor();
    render();
  } else if (ev.key === "Escape") {
    ev.preventDefault();
    state = dismissPanel(state);
    render();
  }
});

editor.addEventListener("click", () => {
  state = { ...state, cursor: editor.selectionStart ?? 0 };
});

endpointInput.addEventListener("change", () => {
  state = { ...state, endpoint: endpointInput.value };
  void refreshHealth();
});

async function refreshHealth(): Promise<void> {
  try {
    const health = await fetchHealth(state.endpoint);
    modelBadge.textContent =
      `${health.model_id}${health.quantized ? " (8-bit)" : ""}`;
    state = { ...state, error: null };
  } catch (err) {
    modelBadge.textContent = "offline";
    state = { ...state, error: String(err) };
  }
  render();
}

void refreshHealth();
render();
