import { Disposition, ExplanationResponse, HeadName, PredictionResponse } from "./types";

export interface SessionItem {
  id: string;
  fileName: string;
  uploadedAt: number;
  thumbnailUrl: string;
  prediction: PredictionResponse;
  disposition: Disposition;
  explanation: ExplanationResponse | null;
  /** head -> resolved overlay URL, filled once per item on first /explain */
  overlays: Partial<Record<HeadName, string>>;
}

/** Serialized form: everything except the original file handle. */
export interface SessionExport {
  version: number;
  items: SessionItem[];
}

const EXPORT_VERSION = 1;

let counter = 0;

export function nextItemId(): string {
  counter += 1;
  return `item-${counter}-${Date.now().toString(36)}`;
}

/**
 * Per-session, in-memory item list. Canonical order is upload time;
 * the comparison view is a sorted copy, never a reorder of the list
 * itself, so late responses to concurrent uploads cannot shuffle rows.
 */
export class Session {
  private items: SessionItem[] = [];

  get size(): number {
    return this.items.length;
  }

  /** Items in upload order. */
  list(): readonly SessionItem[] {
    return this.items;
  }

  get(id: string): SessionItem | undefined {
    return this.items.find((it) => it.id === id);
  }

  add(
    fileName: string,
    prediction: PredictionResponse,
    thumbnailUrl = "",
    uploadedAt = Date.now(),
  ): SessionItem {
    const item: SessionItem = {
      id: nextItemId(),
      fileName,
      uploadedAt,
      thumbnailUrl,
      prediction,
      disposition: "undecided",
      explanation: null,
      overlays: {},
    };
    // insert by upload time, not arrival time, so a slow /predict response
    // from an earlier upload still lands before later ones
    const idx = this.items.findIndex((it) => it.uploadedAt > uploadedAt);
    if (idx === -1) this.items.push(item);
    else this.items.splice(idx, 0, item);
    return item;
  }

  remove(id: string): void {
    this.items = this.items.filter((it) => it.id !== id);
  }

  setDisposition(id: string, disposition: Disposition): void {
    const item = this.get(id);
    if (!item) throw new Error(`no session item ${id}`);
    item.disposition = disposition;
  }

  attachExplanation(
    id: string,
    explanation: ExplanationResponse,
    overlays: Partial<Record<HeadName, string>>,
  ): void {
    const item = this.get(id);
    if (!item) throw new Error(`no session item ${id}`);
    item.explanation = explanation;
    item.overlays = { ...overlays };
  }

  /** Comparison view: ascending remaining shelf life (most urgent first). */
  sortedByShelfLife(): SessionItem[] {
    return [...this.items].sort(
      (a, b) =>
        a.prediction.remaining_shelf_life_days - b.prediction.remaining_shelf_life_days,
    );
  }

  get canExport(): boolean {
    return this.items.length > 0;
  }

  exportJSON(): string {
    if (!this.canExport) throw new Error("empty session cannot be exported");
    const payload: SessionExport = { version: EXPORT_VERSION, items: this.items };
    return JSON.stringify(payload, null, 2);
  }

  static importJSON(text: string): Session {
    const payload = JSON.parse(text) as SessionExport;
    if (payload.version !== EXPORT_VERSION) {
      throw new Error(`unsupported session export version ${payload.version}`);
    }
    const session = new Session();
    session.items = payload.items.map((it) => ({ ...it, overlays: { ...it.overlays } }));
    return session;
  }
}
