/** Presentation state machine: instruction -> fixation cross during the
 * single playback -> rating slider -> vote -> next.
 *
 * The flow never exposes a second playback opportunity: the play handler
 * is one-shot per presentation and the server enforces single use
 * regardless. Network failures surface a retry prompt that re-sends the
 * failed request only; playback is never re-enabled.
 */

import type { Api, Presentation } from "./api.js";
import { DEFAULT_SCALE_SPECS, type Scale, type ScaleSpec } from "./labels.js";

export interface AudioHandle {
  /** Starts playback exactly once; the handle is single-use. */
  play(): Promise<void>;
  onEnded(callback: () => void): void;
  setGain(gain: number): void;
}

export type AudioFactory = (url: string) => AudioHandle;

export interface RatingRequest {
  scale: Scale;
  prompt: string;
  labels: readonly string[];
  initialPosition: number;
}

export interface FlowView {
  /** Window 1: instruction and a Play sound control. The view must disable
   * the control after the first activation. */
  showInstruction(scale: Scale, instruction: string, onPlay: () => void): void;
  /** Window 2: centered fixation cross while audio plays; no transport. */
  showFixation(): void;
  /** Window 3: rating slider; resolves through onSubmit with the final
   * discrete position 1..5. */
  showRating(request: RatingRequest, onSubmit: (vote: number) => void): void;
  showSessionBreak(nextSession: number, onContinue: () => void): void;
  showDone(): void;
  showRetry(message: string, onRetry: () => void): void;
  setProgress(sessionIndex: number, trialInSession: number): void;
}

export class PresentationFlow {
  private gain = 1.0;
  private stopped = false;

  constructor(
    private readonly api: Api,
    private readonly view: FlowView,
    private readonly audioFactory: AudioFactory,
    private readonly specs: Record<Scale, ScaleSpec> = DEFAULT_SCALE_SPECS,
  ) {}

  /** Client-side listening gain, kept in sync by the level control. */
  setGain(gain: number): void {
    this.gain = gain;
  }

  stop(): void {
    this.stopped = true;
  }

  async run(): Promise<void> {
    while (!this.stopped) {
      const advanced = await this.step();
      if (!advanced) return;
    }
  }

  /** Handles one next() response; resolves false when the test is done. */
  async step(): Promise<boolean> {
    let nxt;
    try {
      nxt = await this.api.next();
    } catch (err) {
      await this.retryPrompt(String(err));
      return true;
    }
    if (nxt.type === "done") {
      this.view.showDone();
      return false;
    }
    if (nxt.type === "session_break") {
      await new Promise<void>((resolve) =>
        this.view.showSessionBreak(nxt.next_session, resolve),
      );
      return true;
    }
    await this.presentOne(nxt);
    return true;
  }

  private async presentOne(presentation: Presentation): Promise<void> {
    const spec = this.specs[presentation.scale];
    this.view.setProgress(presentation.session_index, presentation.trial_in_session);

    let playStarted = false;
    await new Promise<void>((resolve) => {
      this.view.showInstruction(presentation.scale, spec.instruction, () => {
        if (playStarted) return; // double activation guard
        playStarted = true;
        void this.playAndRate(presentation, spec).then(resolve);
      });
    });
  }

  private async playAndRate(presentation: Presentation, spec: ScaleSpec): Promise<void> {
    const audio = this.audioFactory(this.api.audioUrl(presentation));
    audio.setGain(this.gain);
    this.view.showFixation();

    const ended = new Promise<void>((resolve) => audio.onEnded(resolve));
    await audio.play();
    await ended;

    await this.withRetry(() => this.api.markPlayed(presentation.presentation_ref));

    const vote = await new Promise<number>((resolve) => {
      this.view.showRating(
        {
          scale: presentation.scale,
          prompt: spec.ratingPrompt,
          labels: spec.labels,
          initialPosition: presentation.slider_initial_position,
        },
        resolve,
      );
    });
    await this.withRetry(() => this.api.vote(presentation.presentation_ref, vote));
  }

  /** Re-runs a failed request after the user acknowledges; playback state
   * is untouched. */
  private async withRetry(action: () => Promise<unknown>): Promise<void> {
    for (;;) {
      try {
        await action();
        return;
      } catch (err) {
        await this.retryPrompt(String(err));
      }
    }
  }

  private retryPrompt(message: string): Promise<void> {
    return new Promise<void>((resolve) => this.view.showRetry(message, resolve));
  }
}
