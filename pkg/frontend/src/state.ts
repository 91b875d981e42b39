// Session state: selected class, count, append-only seed history with a
// replay cursor, and a duplicate-free pinned set.

export interface PinnedImage {
  id: string;
  png: string; // base64 payload exactly as the server sent it
}

export class SessionState {
  selectedClass: string | null = null;
  count = 64;

  private history: number[] = [];
  private cursor = -1;
  private pins = new Map<string, string>();

  get seedHistory(): readonly number[] {
    return this.history;
  }

  get currentSeed(): number | undefined {
    return this.cursor >= 0 ? this.history[this.cursor] : undefined;
  }

  get canGoBack(): boolean {
    return this.cursor > 0;
  }

  recordSeed(seed: number): void {
    this.history.push(seed);
    this.cursor = this.history.length - 1;
  }

  // Step the cursor back one grid; returns the seed to replay.
  back(): number | undefined {
    if (!this.canGoBack) {
      return undefined;
    }
    this.cursor -= 1;
    return this.history[this.cursor];
  }

  // Replaying a historical seed moves the cursor without appending.
  jumpTo(index: number): number | undefined {
    if (index < 0 || index >= this.history.length) {
      return undefined;
    }
    this.cursor = index;
    return this.history[index];
  }

  pin(id: string, png: string): boolean {
    if (this.pins.has(id)) {
      return false;
    }
    this.pins.set(id, png);
    return true;
  }

  unpin(id: string): void {
    this.pins.delete(id);
  }

  isPinned(id: string): boolean {
    return this.pins.has(id);
  }

  get pinned(): PinnedImage[] {
    return [...this.pins.entries()].map(([id, png]) => ({ id, png }));
  }
}

export function gridColumns(count: number): number {
  return count >= 8 ? 8 : Math.max(1, count);
}

export function imageId(cls: string, seed: number, index: number): string {
  return `${cls}-${seed}-${index}`;
}
