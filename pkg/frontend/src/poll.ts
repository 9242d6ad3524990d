// Polling helper for views that wait on server-side progress (generation,
// revision). Starts at a fixed interval and backs off so an idle tab never
// hammers the API.

export interface PollOptions {
  intervalMs?: number;
  maxIntervalMs?: number;
  maxAttempts?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number): Promise<void> =>
  new Promise((resolve) => setTimeout(resolve, ms));

export async function pollUntil<T>(
  read: () => Promise<T>,
  done: (value: T) => boolean,
  options: PollOptions = {},
): Promise<T> {
  const {
    intervalMs = 2000,
    maxIntervalMs = 10000,
    maxAttempts = 30,
    sleep = defaultSleep,
  } = options;
  let wait = intervalMs;
  for (let attempt = 0; attempt < maxAttempts; attempt += 1) {
    const value = await read();
    if (done(value)) {
      return value;
    }
    await sleep(wait);
    wait = Math.min(Math.round(wait * 1.5), maxIntervalMs);
  }
  throw new Error(`gave up polling after ${maxAttempts} attempts`);
}
