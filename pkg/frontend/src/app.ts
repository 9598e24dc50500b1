import { ApiClient, ApiError } from "./api";
import { Session, SessionItem } from "./session";
import { Disposition, HeadName, PredictionResponse } from "./types";

export const MAX_UPLOAD_BYTES = 8 * 1024 * 1024;

const HEADS: HeadName[] = ["vegetable", "spoilage", "day"];

const HEAD_TITLES: Record<HeadName, string> = {
  vegetable: "Vegetable",
  spoilage: "Spoilage",
  day: "Day regression",
};

function pct(p: number): string {
  return (p * 100).toFixed(2);
}

function probBars(title: string, probs: Record<string, number>): string {
  const rows = Object.entries(probs)
    .sort((a, b) => b[1] - a[1])
    .map(
      ([name, p]) => `
      <div class="prob-row">
        <span class="prob-name">${name}</span>
        <span class="prob-bar" style="width:${pct(p)}%"></span>
        <span class="prob-value">${pct(p)}%</span>
      </div>`,
    )
    .join("");
  return `<div class="prob-block" data-head-block="${title.toLowerCase()}">
    <h4>${title}</h4>${rows}</div>`;
}

/**
 * Single-page client of the inference service. All state is in-memory;
 * reloading the page clears the session (the UI says so).
 */
export class App {
  readonly session = new Session();
  private files = new Map<string, Blob>();
  private uploadSeq = 0;
  private selectedId: string | null = null;
  private activeHead: HeadName = "vegetable";
  private sortByShelfLife = false;
  private explainSeed = 0;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {
    this.mount();
  }

  private mount(): void {
    this.root.innerHTML = `
      <div class="banner" hidden></div>
      <p class="session-note">Session data lives only in this tab. Reloading the page clears it.</p>
      <div class="toolbar">
        <input class="file-input" type="file" accept="image/*" multiple>
        <label class="sort-label">
          <input class="sort-toggle" type="checkbox"> sort by remaining shelf life
        </label>
        <button class="export-btn" disabled>Export session JSON</button>
      </div>
      <ul class="item-list"></ul>
      <div class="detail" hidden>
        <div class="head-toggle">
          ${HEADS.map((h) => `<button data-head="${h}">${HEAD_TITLES[h]}</button>`).join("")}
        </div>
        <span class="warning-badge" hidden></span>
        <img class="overlay" alt="explanation overlay">
        <div class="weight-legend"></div>
      </div>`;

    const input = this.root.querySelector<HTMLInputElement>(".file-input")!;
    input.addEventListener("change", () => {
      for (const file of Array.from(input.files ?? [])) void this.handleUpload(file);
      input.value = "";
    });
    this.root.querySelector<HTMLInputElement>(".sort-toggle")!.addEventListener("change", (e) => {
      this.sortByShelfLife = (e.target as HTMLInputElement).checked;
      this.renderList();
    });
    this.root.querySelector<HTMLButtonElement>(".export-btn")!.addEventListener("click", () => {
      this.downloadExport();
    });
    for (const btn of this.root.querySelectorAll<HTMLButtonElement>("[data-head]")) {
      btn.addEventListener("click", () => {
        void this.showHead(btn.dataset.head as HeadName);
      });
    }
  }

  // ---- upload ----

  async handleUpload(file: File): Promise<SessionItem | null> {
    if (!file.type.startsWith("image/")) {
      this.showBanner(`${file.name}: not an image, refused before upload`);
      return null;
    }
    if (file.size > MAX_UPLOAD_BYTES) {
      this.showBanner(`${file.name}: exceeds the ${MAX_UPLOAD_BYTES / 1024 / 1024} MB cap`);
      return null;
    }
    const uploadedAt = ++this.uploadSeq;
    let prediction: PredictionResponse;
    try {
      prediction = await this.api.predict(file, file.name);
    } catch (err) {
      this.showBanner(this.describeError(err));
      return null;
    }
    const item = this.session.add(file.name, prediction, this.makeThumbnail(file), uploadedAt);
    this.files.set(item.id, file);
    this.hideBanner();
    this.renderList();
    return item;
  }

  private makeThumbnail(file: File): string {
    try {
      return URL.createObjectURL(file);
    } catch {
      return "";
    }
  }

  private describeError(err: unknown): string {
    if (err instanceof ApiError) {
      return err.status === 503 ? `service unavailable: ${err.message}` : err.message;
    }
    return `request failed: ${String(err)}`;
  }

  // ---- explanations ----

  /**
   * Show one head's overlay for the selected item. The /explain call is
   * made at most once per item; toggling heads afterwards only swaps the
   * cached overlay URLs.
   */
  async showHead(head: HeadName, itemId?: string): Promise<void> {
    const id = itemId ?? this.selectedId;
    if (!id) return;
    const item = this.session.get(id);
    if (!item) return;
    this.selectedId = id;
    this.activeHead = head;
    if (!item.explanation) {
      const file = this.files.get(id);
      if (!file) return;
      try {
        const expl = await this.api.explain(file, { seed: this.explainSeed }, item.fileName);
        const overlays: Partial<Record<HeadName, string>> = {};
        for (const h of HEADS) {
          const path = expl.overlays[h];
          if (path) overlays[h] = this.api.resolve(path);
        }
        this.session.attachExplanation(id, expl, overlays);
      } catch (err) {
        this.showBanner(`explanation failed (${this.describeError(err)}), press the head button to retry`);
        return;
      }
    }
    this.renderDetail(item);
  }

  selectItem(id: string): void {
    this.selectedId = id;
    void this.showHead(this.activeHead, id);
  }

  // ---- session actions ----

  setDisposition(id: string, disposition: Disposition): void {
    this.session.setDisposition(id, disposition);
    this.renderList();
  }

  exportSession(): string {
    return this.session.exportJSON();
  }

  private downloadExport(): void {
    if (!this.session.canExport) return;
    const blob = new Blob([this.exportSession()], { type: "application/json" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "vegshelf-session.json";
    a.click();
    URL.revokeObjectURL(a.href);
  }

  // ---- rendering ----

  renderList(): void {
    const list = this.root.querySelector<HTMLUListElement>(".item-list")!;
    const items = this.sortByShelfLife ? this.session.sortedByShelfLife() : this.session.list();
    list.innerHTML = "";
    for (const item of items) {
      const li = document.createElement("li");
      li.dataset.id = item.id;
      li.innerHTML = `
        ${item.thumbnailUrl ? `<img class="thumb" src="${item.thumbnailUrl}">` : ""}
        <span class="file-name">${item.fileName}</span>
        <span class="veg-label">${item.prediction.vegetable.label}</span>
        <span class="spoil-label">${item.prediction.spoilage.label.replace(/_/g, " ")}</span>
        <span class="day-estimate">day ${item.prediction.day_estimate.toFixed(2)}</span>
        <span class="shelf-life">${item.prediction.remaining_shelf_life_days.toFixed(2)} d left</span>
        ${probBars("Vegetable", item.prediction.vegetable.probs)}
        ${probBars("Spoilage", item.prediction.spoilage.probs)}
        <select class="disposition">
          ${(["undecided", "keep", "discard"] as Disposition[])
            .map((d) => `<option value="${d}"${d === item.disposition ? " selected" : ""}>${d}</option>`)
            .join("")}
        </select>`;
      li.addEventListener("click", () => this.selectItem(item.id));
      li.querySelector<HTMLSelectElement>(".disposition")!.addEventListener("change", (e) => {
        e.stopPropagation();
        this.setDisposition(item.id, (e.target as HTMLSelectElement).value as Disposition);
      });
      list.appendChild(li);
    }
    this.root.querySelector<HTMLButtonElement>(".export-btn")!.disabled = !this.session.canExport;
  }

  private renderDetail(item: SessionItem): void {
    const detail = this.root.querySelector<HTMLElement>(".detail")!;
    detail.hidden = false;
    for (const btn of detail.querySelectorAll<HTMLButtonElement>("[data-head]")) {
      btn.classList.toggle("active", btn.dataset.head === this.activeHead);
    }
    const overlay = detail.querySelector<HTMLImageElement>(".overlay")!;
    overlay.src = item.overlays[this.activeHead] ?? "";

    const badge = detail.querySelector<HTMLElement>(".warning-badge")!;
    const warnings = item.explanation?.warnings ?? [];
    badge.hidden = warnings.length === 0;
    badge.textContent = warnings.join("; ");

    const legend = detail.querySelector<HTMLElement>(".weight-legend")!;
    const weights = item.explanation?.weights[this.activeHead] ?? [];
    legend.innerHTML = weights
      .map((w, i) => `<span class="weight" data-segment="${i}">seg ${i}: ${w.toFixed(4)}</span>`)
      .join("");
  }

  private showBanner(message: string): void {
    const banner = this.root.querySelector<HTMLElement>(".banner")!;
    banner.hidden = false;
    banner.textContent = message;
  }

  private hideBanner(): void {
    const banner = this.root.querySelector<HTMLElement>(".banner")!;
    banner.hidden = true;
    banner.textContent = "";
  }
}
