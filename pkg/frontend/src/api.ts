/** Thin typed client over the session HTTP API. Every number the console
 * shows comes out of these documents; no clinical computation happens
 * client-side. */

import type { ResultDocument, ReviewRequest, SessionStatus } from "./types.js";

export interface SubmitMetadata {
  mode: "classification_only" | "full";
  patient?: Record<string, unknown>;
  seg_config?: { duration_s?: number; overlap_pct?: number };
  orch_config?: { rounds?: number };
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function ensureOk(response: Response): Promise<Response> {
  if (response.ok) return response;
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  async createSession(
    metadata: SubmitMetadata,
    audio: Blob,
    filename = "recording.wav",
  ): Promise<string> {
    const form = new FormData();
    form.append("metadata", JSON.stringify(metadata));
    form.append("audio", audio, filename);
    const response = await ensureOk(
      await fetch(`${this.baseUrl}/api/sessions`, {
        method: "POST",
        body: form,
      }),
    );
    const body = (await response.json()) as { sessionId: string };
    return body.sessionId;
  }

  async getStatus(sessionId: string): Promise<SessionStatus> {
    const response = await ensureOk(
      await fetch(`${this.baseUrl}/api/sessions/${sessionId}`),
    );
    return (await response.json()) as SessionStatus;
  }

  async getResults(sessionId: string): Promise<ResultDocument> {
    const response = await ensureOk(
      await fetch(`${this.baseUrl}/api/sessions/${sessionId}/results`),
    );
    return (await response.json()) as ResultDocument;
  }

  /** Relative URL for one chunk's audio; heatmap cells link here. */
  chunkAudioUrl(sessionId: string, index: number): string {
    return `${this.baseUrl}/api/sessions/${sessionId}/chunks/${index}/audio`;
  }

  async fetchChunkAudio(sessionId: string, index: number): Promise<Blob> {
    const response = await ensureOk(
      await fetch(this.chunkAudioUrl(sessionId, index)),
    );
    return await response.blob();
  }

  async postReview(
    sessionId: string,
    review: ReviewRequest,
  ): Promise<SessionStatus["lifecycle"]> {
    const response = await ensureOk(
      await fetch(`${this.baseUrl}/api/sessions/${sessionId}/review`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(review),
      }),
    );
    const body = (await response.json()) as { lifecycle: SessionStatus["lifecycle"] };
    return body.lifecycle;
  }

  async upgrade(sessionId: string): Promise<void> {
    await ensureOk(
      await fetch(`${this.baseUrl}/api/sessions/${sessionId}/upgrade`, {
        method: "POST",
      }),
    );
  }

  exportUrl(sessionId: string): string {
    return `${this.baseUrl}/api/sessions/${sessionId}/export`;
  }

  async fetchExportHtml(sessionId: string): Promise<string> {
    const response = await ensureOk(await fetch(this.exportUrl(sessionId)));
    return await response.text();
  }

  /** Poll status once a second until the lifecycle leaves in-flight states. */
  async waitForSettled(
    sessionId: string,
    options: { intervalMs?: number; timeoutMs?: number } = {},
  ): Promise<SessionStatus> {
    const interval = options.intervalMs ?? 1000;
    const deadline = Date.now() + (options.timeoutMs ?? 120_000);
    for (;;) {
      const status = await this.getStatus(sessionId);
      if (!["Queued", "Processing", "Revising"].includes(status.lifecycle)) {
        return status;
      }
      if (Date.now() > deadline) {
        throw new Error(`timed out waiting for session ${sessionId}`);
      }
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }
}
