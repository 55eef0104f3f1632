// Session store driving the design loop; panels subscribe and re-render.
// At most one mutation is in flight at a time (spinners, no optimistic state).

import {
  AnalyzeReport,
  MeshPayload,
  Method,
  PostOp,
  ProfileSummary,
  ServiceClient,
  ServiceError,
  Side,
} from "./api.js";
import { Bitmask, formatBitmask, parseBitmask } from "./bitmask.js";

export interface ProfileSlot {
  mask: Bitmask;
  warnings: string[];
  dirty: boolean; // local cell edits not yet committed to the service
}

export interface StageEntry {
  id: number;
  op: string;
  warnings: string[];
}

export interface AppState {
  session: string | null;
  profiles: Partial<Record<Side, ProfileSlot>>;
  stages: StageEntry[];
  currentStage: number | null;
  mesh: MeshPayload | null;
  analysis: AnalyzeReport | null;
  error: { stage: string; code: string; message: string } | null;
  busy: boolean;
}

export const SIDES: Side[] = ["front", "right", "top"];

/** Client-side mirror of the service's triplanar axis constraints, used for
 * live mismatch diagnostics in the method panel (the authoritative check
 * still happens server-side). */
export function diagnoseTriplanar(profiles: Partial<Record<Side, ProfileSlot>>): string[] {
  const out: string[] = [];
  const front = profiles.front?.mask;
  const right = profiles.right?.mask;
  const top = profiles.top?.mask;
  if (front && right && front.rows !== right.rows) {
    out.push(`y axis disagrees: front.rows=${front.rows} vs right.rows=${right.rows}`);
  }
  if (front && top && front.cols !== top.cols) {
    out.push(`x axis disagrees: front.cols=${front.cols} vs top.cols=${top.cols}`);
  }
  if (right && top && right.cols !== top.rows) {
    out.push(`z axis disagrees: right.cols=${right.cols} vs top.rows=${top.rows}`);
  }
  return out;
}

export class AppStore {
  state: AppState = {
    session: null,
    profiles: {},
    stages: [],
    currentStage: null,
    mesh: null,
    analysis: null,
    error: null,
    busy: false,
  };

  private listeners: Array<(s: AppState) => void> = [];

  constructor(private client: ServiceClient) {}

  subscribe(listener: (s: AppState) => void): () => void {
    this.listeners.push(listener);
    listener(this.state);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(partial: Partial<AppState>) {
    this.state = { ...this.state, ...partial };
    for (const listener of this.listeners) listener(this.state);
  }

  private async run<T>(action: () => Promise<T>): Promise<T | null> {
    if (this.state.busy) return null;
    this.emit({ busy: true, error: null });
    try {
      return await action();
    } catch (err) {
      if (err instanceof ServiceError) {
        this.emit({ error: { stage: err.stage, code: err.code, message: err.message } });
      } else {
        this.emit({
          error: { stage: "client", code: "unexpected", message: String(err) },
        });
      }
      return null;
    } finally {
      this.emit({ busy: false });
    }
  }

  async init(): Promise<void> {
    await this.run(async () => {
      const { id } = await this.client.createSession();
      this.emit({ session: id });
    });
  }

  private applyProfile(summary: ProfileSummary) {
    const mask = parseBitmask(summary.cells);
    this.emit({
      profiles: {
        ...this.state.profiles,
        [summary.side]: { mask, warnings: summary.warnings, dirty: false },
      },
    });
  }

  async uploadScan(side: Side, image: Blob, filename?: string): Promise<boolean> {
    const ok = await this.run(async () => {
      const summary = await this.client.scan(this.session(), side, image, filename);
      this.applyProfile(summary);
      return true;
    });
    return ok === true;
  }

  /** Toggle one cell locally; the edit is pushed on the next commit. */
  editCell(side: Side, row: number, col: number) {
    const slot = this.state.profiles[side];
    if (!slot) return;
    const cells = slot.mask.cells.slice();
    const idx = row * slot.mask.cols + col;
    cells[idx] = !cells[idx];
    this.emit({
      profiles: {
        ...this.state.profiles,
        [side]: { ...slot, mask: { ...slot.mask, cells }, dirty: true },
      },
    });
  }

  async commitProfile(side: Side): Promise<boolean> {
    const slot = this.state.profiles[side];
    if (!slot) return false;
    const ok = await this.run(async () => {
      const summary = await this.client.putProfile(
        this.session(),
        side,
        formatBitmask(slot.mask),
      );
      this.applyProfile(summary);
      return true;
    });
    return ok === true;
  }

  async setProfileText(side: Side, maskText: string): Promise<boolean> {
    const ok = await this.run(async () => {
      const summary = await this.client.putProfile(this.session(), side, maskText);
      this.applyProfile(summary);
      return true;
    });
    return ok === true;
  }

  async reconstruct(method: Method, params: Record<string, unknown>): Promise<boolean> {
    const ok = await this.run(async () => {
      const info = await this.client.reconstruct(this.session(), method, params);
      this.emit({ stages: [{ id: info.stage, op: method, warnings: info.warnings }] });
      await this.selectStage(info.stage);
      return true;
    });
    return ok === true;
  }

  async applyPost(op: PostOp, params: Record<string, unknown>): Promise<boolean> {
    const ok = await this.run(async () => {
      const info = await this.client.applyPost(this.session(), op, params);
      this.emit({
        stages: [...this.state.stages, { id: info.stage, op, warnings: info.warnings }],
      });
      await this.selectStage(info.stage);
      return true;
    });
    return ok === true;
  }

  /** Fetch mesh geometry and the analyze/balance readout for a stage. */
  async selectStage(stage: number): Promise<void> {
    const mesh = await this.client.meshJson(this.session(), stage);
    const analysis = await this.client.analyze(this.session(), stage);
    this.emit({ currentStage: stage, mesh, analysis });
  }

  async downloadObj(stage?: number): Promise<Uint8Array | null> {
    const target = stage ?? this.state.currentStage;
    if (target == null) return null;
    return await this.run(() => this.client.meshObj(this.session(), target));
  }

  session(): string {
    if (!this.state.session) throw new ServiceError(0, "client", "no-session", "no session yet");
    return this.state.session;
  }
}
