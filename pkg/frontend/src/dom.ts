/** Browser bindings: renders the three windows into a host element and
 * adapts HTMLAudioElement + WebAudio gain to the flow's AudioHandle. */

import { HttpApi, type Presentation } from "./api.js";
import { PresentationFlow, type AudioHandle, type FlowView, type RatingRequest } from "./flow.js";
import { LevelControl, LEVEL_MAX_DB, LEVEL_MIN_DB } from "./level.js";
import type { Scale } from "./labels.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

class WebAudioHandle implements AudioHandle {
  private readonly element: HTMLAudioElement;
  private readonly gainNode: GainNode;
  private started = false;

  constructor(url: string, context: AudioContext) {
    this.element = new Audio(url);
    this.element.preload = "auto";
    const source = context.createMediaElementSource(this.element);
    this.gainNode = context.createGain();
    source.connect(this.gainNode).connect(context.destination);
  }

  async play(): Promise<void> {
    if (this.started) return;
    this.started = true;
    await this.element.play();
  }

  onEnded(callback: () => void): void {
    this.element.addEventListener("ended", callback, { once: true });
  }

  setGain(gain: number): void {
    this.gainNode.gain.value = gain;
  }
}

class DomView implements FlowView {
  private readonly stage: HTMLElement;
  private readonly progress: HTMLElement;

  constructor(private readonly host: HTMLElement) {
    this.progress = el("div", "progress");
    this.stage = el("div", "stage");
    host.replaceChildren(this.progress, this.stage);
  }

  setProgress(sessionIndex: number, trialInSession: number): void {
    this.progress.textContent = `Session ${sessionIndex} - trial ${trialInSession + 1}`;
  }

  showInstruction(scale: Scale, instruction: string, onPlay: () => void): void {
    const button = el("button", "play", "Play sound");
    button.addEventListener("click", () => {
      button.disabled = true; // no second activation
      onPlay();
    });
    this.stage.replaceChildren(
      el("p", "instruction", instruction),
      button,
    );
  }

  showFixation(): void {
    this.stage.replaceChildren(el("div", "fixation-cross", "+"));
  }

  showRating(request: RatingRequest, onSubmit: (vote: number) => void): void {
    const slider = el("input", "rating-slider") as HTMLInputElement;
    slider.type = "range";
    slider.min = "1";
    slider.max = "5";
    slider.step = "1";
    slider.value = String(request.initialPosition);

    const labelList = el("ol", "labels");
    for (const label of [...request.labels].reverse()) {
      labelList.appendChild(el("li", undefined, label));
    }
    const submit = el("button", "submit", "Submit rating");
    const send = () => {
      submit.disabled = true;
      onSubmit(Number(slider.value));
    };
    submit.addEventListener("click", send);
    slider.addEventListener("keydown", (event) => {
      const key = (event as KeyboardEvent).key;
      if (key >= "1" && key <= "5") slider.value = key;
      if (key === "Enter") send();
    });
    this.stage.replaceChildren(
      el("p", "prompt", request.prompt),
      slider,
      labelList,
      submit,
    );
  }

  showSessionBreak(nextSession: number, onContinue: () => void): void {
    const button = el("button", "continue", `Start session ${nextSession}`);
    button.addEventListener("click", onContinue, { once: true });
    this.stage.replaceChildren(
      el("p", "break", "Short rest period. Continue when you are ready."),
      button,
    );
  }

  showDone(): void {
    this.stage.replaceChildren(
      el("p", "done", "The listening test is complete. Thank you!"),
    );
  }

  showRetry(message: string, onRetry: () => void): void {
    const button = el("button", "retry", "Retry");
    button.addEventListener("click", onRetry, { once: true });
    this.stage.replaceChildren(
      el("p", "error", `Network problem: ${message}`),
      button,
    );
  }
}

export interface BootOptions {
  baseUrl: string;
  token: string;
  host: HTMLElement;
  levelHost?: HTMLElement;
}

export function boot(options: BootOptions): PresentationFlow {
  const api = new HttpApi(options.baseUrl, options.token);
  const view = new DomView(options.host);
  const context = new AudioContext();
  const flow = new PresentationFlow(api, view, (url) => new WebAudioHandle(url, context));

  if (options.levelHost) {
    const level = new LevelControl(api, (gain) => flow.setGain(gain));
    const slider = el("input", "level-slider") as HTMLInputElement;
    slider.type = "range";
    slider.min = String(LEVEL_MIN_DB);
    slider.max = String(LEVEL_MAX_DB);
    slider.step = "0.1";
    slider.value = "0";
    slider.addEventListener("change", () => {
      void level.set(Number(slider.value)).then((clamped) => {
        slider.value = String(clamped);
      });
    });
    options.levelHost.replaceChildren(
      el("span", undefined, "Listening level (dB)"),
      slider,
    );
  }
  void flow.run();
  return flow;
}
