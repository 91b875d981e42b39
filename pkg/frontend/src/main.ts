import { ApiClient, ApiError, GenerateResponse, pngDataUri } from "./api.js";
import { SessionState, gridColumns, imageId } from "./state.js";

const api = new ApiClient("");
const state = new SessionState();

const banner = document.getElementById("banner") as HTMLDivElement;
const picker = document.getElementById("picker") as HTMLDivElement;
const grid = document.getElementById("grid") as HTMLDivElement;
const pinsEl = document.getElementById("pins") as HTMLDivElement;
const countInput = document.getElementById("count") as HTMLInputElement;
const generateBtn = document.getElementById("generate") as HTMLButtonElement;
const rerollBtn = document.getElementById("reroll") as HTMLButtonElement;
const backBtn = document.getElementById("back") as HTMLButtonElement;
const downloadBtn = document.getElementById("download") as HTMLButtonElement;
const seedLabel = document.getElementById("seed") as HTMLSpanElement;
const historyEl = document.getElementById("history") as HTMLDivElement;

let inFlight = false;
let lastResponse: GenerateResponse | null = null;

function showError(message: string, retry?: () => void) {
  banner.textContent = "";
  banner.classList.remove("hidden");
  banner.append(message);
  if (retry) {
    const btn = document.createElement("button");
    btn.textContent = "Retry";
    btn.onclick = () => {
      banner.classList.add("hidden");
      retry();
    };
    banner.append(" ", btn);
  }
}

function clearError() {
  banner.classList.add("hidden");
}

function setBusy(busy: boolean) {
  inFlight = busy;
  generateBtn.disabled = busy || !state.selectedClass;
  rerollBtn.disabled = busy || !state.selectedClass;
  backBtn.disabled = busy || !state.canGoBack;
}

async function loadClasses() {
  try {
    const classes = await api.classes();
    renderPicker(classes);
    clearError();
  } catch (err) {
    showError(`Could not reach the generation service: ${err}`, loadClasses);
  }
}

function renderPicker(classes: string[]) {
  picker.textContent = "";
  for (const cls of classes) {
    const btn = document.createElement("button");
    btn.className = "swatch";
    btn.dataset.cls = cls;
    btn.title = cls;
    // the 12 class names are CSS named colors matching the labeler's
    // canonical shades, so the name doubles as the swatch color
    btn.style.backgroundColor = cls;
    btn.onclick = () => {
      state.selectedClass = cls;
      for (const other of picker.querySelectorAll(".swatch")) {
        other.classList.toggle("active", other === btn);
      }
      setBusy(inFlight);
    };
    picker.append(btn);
  }
}

function renderGrid(resp: GenerateResponse) {
  lastResponse = resp;
  grid.textContent = "";
  grid.style.gridTemplateColumns = `repeat(${gridColumns(resp.count)}, 34px)`;
  resp.images.forEach((png, i) => {
    const id = imageId(resp.class, resp.seed_used, i);
    const img = document.createElement("img");
    img.src = pngDataUri(png);
    img.width = 32;
    img.height = 32;
    img.className = state.isPinned(id) ? "pinned" : "";
    img.onclick = () => {
      if (state.pin(id, png)) {
        img.classList.add("pinned");
        renderPins();
      }
    };
    grid.append(img);
  });
  seedLabel.textContent = `seed ${resp.seed_used}`;
  renderHistory();
}

function renderHistory() {
  historyEl.textContent = "";
  state.seedHistory.forEach((seed, idx) => {
    const btn = document.createElement("button");
    btn.textContent = String(seed);
    btn.classList.toggle("current", seed === state.currentSeed);
    btn.onclick = () => {
      const s = state.jumpTo(idx);
      if (s !== undefined) {
        void requestGrid(s, false);
      }
    };
    historyEl.append(btn);
  });
}

function renderPins() {
  pinsEl.textContent = "";
  for (const pin of state.pinned) {
    const img = document.createElement("img");
    img.src = pngDataUri(pin.png);
    img.width = 32;
    img.height = 32;
    img.title = `${pin.id} (click to unpin)`;
    img.onclick = () => {
      state.unpin(pin.id);
      renderPins();
    };
    pinsEl.append(img);
  }
  downloadBtn.disabled = state.pinned.length === 0;
}

async function requestGrid(seed: number | undefined, record: boolean) {
  if (!state.selectedClass || inFlight) {
    return;
  }
  const count = Math.min(256, Math.max(1, Number(countInput.value) || 64));
  countInput.value = String(count);
  state.count = count;
  setBusy(true);
  try {
    const resp = await api.generate(state.selectedClass, count, seed);
    if (record) {
      state.recordSeed(resp.seed_used);
    }
    renderGrid(resp);
    clearError();
  } catch (err) {
    if (err instanceof ApiError && err.status === 400) {
      showError(`Request rejected: ${err.message}`);
    } else {
      showError(`Generation failed: ${err}`, () => void requestGrid(seed, record));
    }
  } finally {
    setBusy(false);
  }
}

function downloadPins() {
  for (const pin of state.pinned) {
    const a = document.createElement("a");
    a.href = pngDataUri(pin.png);
    a.download = `${pin.id}.png`;
    a.click();
  }
}

generateBtn.onclick = () => void requestGrid(state.currentSeed, state.currentSeed === undefined);
rerollBtn.onclick = () => void requestGrid(undefined, true);
backBtn.onclick = () => {
  const seed = state.back();
  if (seed !== undefined) {
    void requestGrid(seed, false);
  }
};
downloadBtn.onclick = downloadPins;

setBusy(false);
void loadClasses();
