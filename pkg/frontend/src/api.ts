// Client for the generation service. fetch is injectable so tests can
// capture requests without a server.

export interface GenerateResponse {
  class: string;
  count: number;
  seed_used: number;
  images: string[]; // base64 PNG payloads
  grid: string;
}

export interface HealthResponse {
  status: string;
  checkpoint: string;
}

export class ApiError extends Error {
  constructor(message: string, public status?: number) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(`server unreachable: ${err}`);
    }
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (body?.detail) {
          detail = Array.isArray(body.detail)
            ? body.detail.map((d: { message?: string }) => d.message ?? JSON.stringify(d)).join("; ")
            : String(body.detail);
        }
      } catch {
        // keep statusText
      }
      throw new ApiError(detail, resp.status);
    }
    return resp.json() as Promise<T>;
  }

  classes(): Promise<string[]> {
    return this.request<string[]>("/classes");
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("/health");
  }

  generate(cls: string, count: number, seed?: number): Promise<GenerateResponse> {
    const body: Record<string, unknown> = { class: cls, count };
    if (seed !== undefined) {
      body.seed = seed;
    }
    return this.request<GenerateResponse>("/generate", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}

export function pngDataUri(base64: string): string {
  return `data:image/png;base64,${base64}`;
}
