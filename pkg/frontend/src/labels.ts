/** Rating scales, instructions, and category labels.
 *
 * Wording follows the P.835 category scales; instruction texts are
 * configurable (pass custom specs to PresentationFlow) since only the
 * speech-signal instruction wording is fixed by convention.
 */

export type Scale = "SIG" | "BAK" | "OVRL";

export interface ScaleSpec {
  /** Shown in the first window, before playback. */
  instruction: string;
  /** Shown in the rating window together with the slider. */
  ratingPrompt: string;
  /** Category labels for slider positions 1..5 (index 0 = position 1). */
  labels: readonly [string, string, string, string, string];
}

export const DEFAULT_SCALE_SPECS: Record<Scale, ScaleSpec> = {
  SIG: {
    instruction: "Attend ONLY to the SPEECH SIGNAL.",
    ratingPrompt:
      "Attending ONLY to the SPEECH SIGNAL, select the category which best " +
      "describes the sample you just heard.",
    labels: [
      "Very distorted",
      "Fairly distorted",
      "Somewhat distorted",
      "Slightly distorted",
      "Not distorted",
    ],
  },
  BAK: {
    instruction: "Attend ONLY to the BACKGROUND.",
    ratingPrompt:
      "Attending ONLY to the BACKGROUND, select the category which best " +
      "describes the sample you just heard.",
    labels: [
      "Very intrusive",
      "Somewhat intrusive",
      "Noticeable but not intrusive",
      "Slightly noticeable",
      "Not noticeable",
    ],
  },
  OVRL: {
    instruction: "Attend to BOTH the SPEECH SIGNAL and the BACKGROUND.",
    ratingPrompt:
      "Select the category which best describes the overall quality of the " +
      "sample for everyday speech communication.",
    labels: ["Bad", "Poor", "Fair", "Good", "Excellent"],
  },
};
