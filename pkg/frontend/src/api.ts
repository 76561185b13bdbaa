/**
 * Typed client for the raid HTTP service.
 *
 * All polygon coordinates cross the wire y-down (screen convention); the
 * service owns the conversion to math coordinates, so nothing here touches
 * geometry. Errors arrive as {"error": {code, message, detail}} and are
 * rethrown as ApiError so callers can branch on the code.
 */

export type Ring = [number, number][];

export interface RegionOutline {
  rings: Ring[];
  holes: boolean[];
}

export interface ImageRegion extends RegionOutline {
  region_id: string;
  label: string;
}

export interface ImageDetail {
  image_id: string;
  width: number;
  height: number;
  regions: ImageRegion[];
}

export interface ImagePage {
  total: number;
  images: ImageDetail[];
}

export interface SketchBody {
  source: Ring[];
  source_holes?: boolean[];
  target: Ring[];
  target_holes?: boolean[];
  width: number;
  height: number;
  kind: "raid" | "sc";
}

export interface DescriptorPayload {
  values: number[];
  r_max: number;
  kind: string;
  fallback_bins?: number[][];
}

export interface QueryBody {
  descriptor?: { values: number[] };
  verb?: string;
  image_id?: string;
  source_region_id?: string;
  source_label?: string;
  target_label?: string;
  min_area_fraction?: number;
  top_n?: number;
}

export interface QueryResult {
  image_id: string;
  source_region_id: string;
  source_label: string;
  target_label: string;
  area_fraction: number;
  distance: number;
  width?: number;
  height?: number;
  source_outline?: RegionOutline;
  target_outline?: RegionOutline;
}

export interface QueryResponse {
  query_id: string;
  results: QueryResult[];
}

export interface VerbDetail {
  name: string;
  created_from: string;
  descriptor: DescriptorPayload;
}

export interface FeedbackBody {
  query_id: string;
  image_id: string;
  source_region_id: string;
  target_label: string;
  relevant: boolean;
}

export interface PrecisionPoint {
  n: number;
  precision: number;
}

export interface PrecisionCurve {
  query_id: string;
  points: PrecisionPoint[];
}

export class ApiError extends Error {
  code: string;
  status: number;
  detail: string;

  constructor(code: string, message: string, status: number, detail = "") {
    super(message);
    this.name = "ApiError";
    this.code = code;
    this.status = status;
    this.detail = detail;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private base: string;
  private fetchFn: FetchLike;

  constructor(base = "", fetchFn?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    // bind so the default works when fetch is a free function on globalThis
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(
    path: string,
    init?: RequestInit,
    signal?: AbortSignal,
  ): Promise<T> {
    const res = await this.fetchFn(this.base + path, { ...init, signal });
    let body: unknown = null;
    try {
      body = await res.json();
    } catch {
      body = null;
    }
    if (!res.ok) {
      const err = (body as { error?: { code?: string; message?: string; detail?: string } } | null)
        ?.error;
      throw new ApiError(
        err?.code ?? "bad_response",
        err?.message ?? `request failed with status ${res.status}`,
        res.status,
        err?.detail ?? "",
      );
    }
    return body as T;
  }

  private post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    return this.request<T>(
      path,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      },
      signal,
    );
  }

  listImages(limit = 12, offset = 0): Promise<ImagePage> {
    return this.request<ImagePage>(`/images?limit=${limit}&offset=${offset}`);
  }

  getImage(imageId: string): Promise<ImageDetail> {
    return this.request<ImageDetail>(`/images/${encodeURIComponent(imageId)}`);
  }

  computeDescriptor(body: SketchBody, signal?: AbortSignal): Promise<DescriptorPayload> {
    return this.post<DescriptorPayload>("/descriptor", body, signal);
  }

  runQuery(body: QueryBody, signal?: AbortSignal): Promise<QueryResponse> {
    return this.post<QueryResponse>("/query", body, signal);
  }

  listVerbs(): Promise<{ verbs: string[] }> {
    return this.request<{ verbs: string[] }>("/verbs");
  }

  getVerb(name: string): Promise<VerbDetail> {
    return this.request<VerbDetail>(`/verbs/${encodeURIComponent(name)}`);
  }

  saveVerb(
    name: string,
    descriptor: DescriptorPayload,
    createdFrom = "",
  ): Promise<{ name: string; created_from: string }> {
    return this.post("/verbs", {
      name,
      descriptor: {
        values: descriptor.values,
        r_max: descriptor.r_max,
        kind: descriptor.kind,
      },
      created_from: createdFrom,
    });
  }

  sendFeedback(body: FeedbackBody): Promise<{ query_id: string; labeled: number }> {
    return this.post("/feedback", body);
  }

  precisionCurve(queryId: string): Promise<PrecisionCurve> {
    return this.request<PrecisionCurve>(
      `/queries/${encodeURIComponent(queryId)}/precision`,
    );
  }
}
