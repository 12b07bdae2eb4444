/** Listening-level adjustment: a slider clamped to [-6, +6] dB applied as
 * client-side gain and reported to the server. */

export const LEVEL_MIN_DB = -6.0;
export const LEVEL_MAX_DB = 6.0;

export function clampLevelDb(db: number): number {
  if (Number.isNaN(db)) return 0;
  return Math.min(LEVEL_MAX_DB, Math.max(LEVEL_MIN_DB, db));
}

export function dbToGain(db: number): number {
  return Math.pow(10, db / 20);
}

export interface LevelReporter {
  setLevel(offsetDb: number): Promise<void>;
}

/** Holds the current offset; pushes clamped values to the audio chain and
 * the server. */
export class LevelControl {
  private offsetDb = 0;

  constructor(
    private readonly reporter: LevelReporter,
    private readonly applyGain: (gain: number) => void,
  ) {}

  get currentOffsetDb(): number {
    return this.offsetDb;
  }

  get currentGain(): number {
    return dbToGain(this.offsetDb);
  }

  async set(db: number): Promise<number> {
    this.offsetDb = clampLevelDb(db);
    this.applyGain(this.currentGain);
    await this.reporter.setLevel(this.offsetDb);
    return this.offsetDb;
  }
}
