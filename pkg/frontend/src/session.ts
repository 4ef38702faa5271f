// Session state machine.  The only scene and totals ever held are the
// server's last confirmed payload: every edit round-trips, a rejected edit
// changes nothing, and the post-finish view re-reads the metrics endpoint
// so the displayed record equals what the service reports.

import { ApiClient, ApiError } from "./api";
import { opForKey } from "./keys";
import { SerialQueue } from "./queue";
import type { EditOp, MetricsResponse, SessionPayload, TlxRatings, Totals } from "./types";

export type Phase = "idle" | "active" | "finished";

export interface Notice {
  kind: "hint" | "error";
  text: string;
}

export interface Snapshot {
  phase: Phase;
  payload: SessionPayload | null;
  metrics: MetricsResponse | null;
  notice: Notice | null;
  pendingEvents: number;
}

const NO_SELECTION_HINT = "click an object to select it, then use the keys";

export class SessionController {
  private payload: SessionPayload | null = null;
  private metricsView: MetricsResponse | null = null;
  private notice: Notice | null = null;
  private readonly queue = new SerialQueue();

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (snap: Snapshot) => void = () => {},
  ) {}

  snapshot(): Snapshot {
    const phase: Phase =
      this.payload === null ? "idle" : this.payload.finished ? "finished" : "active";
    return {
      phase,
      payload: this.payload,
      metrics: this.metricsView,
      notice: this.notice,
      pendingEvents: this.queue.pending,
    };
  }

  /** Totals of record: the metrics endpoint once finished, otherwise the
   * last event response.  Never computed client-side. */
  displayedTotals(): Totals | null {
    if (this.metricsView !== null) return this.metricsView.totals;
    return this.payload === null ? null : this.payload.totals;
  }

  private emit(): void {
    this.onChange(this.snapshot());
  }

  private setNotice(kind: Notice["kind"], text: string): void {
    this.notice = { kind, text };
    this.emit();
  }

  private noticeFromError(err: unknown): void {
    if (err instanceof ApiError) {
      this.setNotice("error", `rejected (${err.status}): ${err.detail}`);
    } else {
      this.setNotice("error", String(err));
    }
  }

  async start(sceneId: string, participant: string): Promise<void> {
    try {
      this.payload = await this.api.createSession(sceneId, participant);
      this.metricsView = null;
      this.notice = null;
      this.emit();
    } catch (err) {
      this.noticeFromError(err);
    }
  }

  /** Queues a click-to-select; the server records it and echoes the
   * selection back in the payload. */
  select(objectId: number): Promise<void> {
    return this.postEdit("select", () => objectId);
  }

  /** Queues one edit per keydown.  The target object is resolved when the
   * event is about to be sent, after every earlier queued post confirmed,
   * so it always matches the server's own idea of the selection. */
  handleKey(key: string): Promise<void> {
    const op = opForKey(key);
    if (op === null) return Promise.resolve();
    return this.postEdit(op, (payload) => payload.selected_object);
  }

  private postEdit(op: EditOp, target: (payload: SessionPayload) => number | null): Promise<void> {
    return this.queue.run(async () => {
      const payload = this.payload;
      if (payload === null) return;
      const objectId = target(payload);
      if (objectId === null) {
        this.setNotice("hint", NO_SELECTION_HINT);
        return;
      }
      try {
        this.payload = await this.api.postEvent(payload.session_id, op, objectId);
        this.notice = null;
      } catch (err) {
        // 422/409 rejections leave the confirmed scene untouched
        this.noticeFromError(err);
        return;
      }
      this.emit();
    });
  }

  finish(tlx: TlxRatings): Promise<void> {
    return this.queue.run(async () => {
      const payload = this.payload;
      if (payload === null) return;
      try {
        const done = await this.api.finishSession(payload.session_id, tlx);
        this.payload = {
          ...payload,
          scene: done.final_scene,
          totals: done.totals,
          finished: true,
        };
        this.metricsView = await this.api.metrics(payload.session_id);
        this.notice = null;
      } catch (err) {
        this.noticeFromError(err);
        return;
      }
      this.emit();
    });
  }
}
