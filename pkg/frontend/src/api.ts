/** Typed client for the listening-test service HTTP API. */

import type { Scale } from "./labels.js";

export interface Enrollment {
  participant_token: string;
  panel_id: string;
  slot_index: number;
  scale_order: string;
}

export interface Presentation {
  type: "presentation";
  presentation_ref: string;
  audio_url: string;
  scale: Scale;
  slider_initial_position: number;
  session_index: number;
  trial_in_session: number;
  presentation_index: number;
  practice: boolean;
  audio_fetched: boolean;
  played: boolean;
}

export interface SessionBreak {
  type: "session_break";
  completed_session: number;
  next_session: number;
}

export interface Done {
  type: "done";
}

export type NextResponse = Presentation | SessionBreak | Done;

export interface VoteAck {
  status: string;
  votes_completed: number;
  done: boolean;
}

/** Surface the flow depends on; tests substitute a scripted fake. */
export interface Api {
  next(): Promise<NextResponse>;
  markPlayed(presentationRef: string): Promise<void>;
  vote(presentationRef: string, vote: number): Promise<VoteAck>;
  setLevel(offsetDb: number): Promise<void>;
  audioUrl(presentation: Presentation): string;
}

export class HttpApi implements Api {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      let detail = `${resp.status}`;
      try {
        const body = (await resp.json()) as { error?: string; detail?: string };
        detail = body.error ? `${body.error}: ${body.detail ?? ""}` : detail;
      } catch {
        /* non-JSON error body */
      }
      throw new Error(`request ${path} failed (${detail})`);
    }
    return (await resp.json()) as T;
  }

  static async enroll(
    baseUrl: string,
    experimentId: string,
    fetchFn: typeof fetch = fetch,
  ): Promise<Enrollment> {
    const resp = await fetchFn(`${baseUrl}/experiments/${experimentId}/enroll`, {
      method: "POST",
    });
    if (!resp.ok) throw new Error(`enroll failed (${resp.status})`);
    return (await resp.json()) as Enrollment;
  }

  next(): Promise<NextResponse> {
    return this.request(`/participants/${this.token}/next`);
  }

  async markPlayed(presentationRef: string): Promise<void> {
    await this.request(`/participants/${this.token}/played`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ presentation_ref: presentationRef }),
    });
  }

  vote(presentationRef: string, vote: number): Promise<VoteAck> {
    return this.request(`/participants/${this.token}/vote`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ presentation_ref: presentationRef, vote }),
    });
  }

  async setLevel(offsetDb: number): Promise<void> {
    await this.request(`/participants/${this.token}/level`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ offset_db: offsetDb }),
    });
  }

  audioUrl(presentation: Presentation): string {
    return `${this.baseUrl}${presentation.audio_url}`;
  }
}
