/**
 * Typed client for the preview service.
 *
 * The transport is injectable so tests can run against an in-memory
 * implementation of the wire contract; the default transport wraps fetch.
 */
import {
  FrameResponse,
  PreviewMode,
  RevisionSchema,
  SessionState,
  StateSchema,
  Trajectory,
} from "./types.js";

export interface TransportRequest {
  method: "GET" | "PUT";
  path: string; // path + query, e.g. "/frame/3?mode=pose&scale=1"
  headers?: Record<string, string>;
  body?: string;
}

export interface TransportResponse {
  status: number;
  headers: Record<string, string>; // lower-case keys
  body: Uint8Array;
}

export type Transport = (req: TransportRequest) => Promise<TransportResponse>;

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service responded ${status}: ${detail}`);
  }
}

function decodeJson(body: Uint8Array): unknown {
  return JSON.parse(new TextDecoder().decode(body));
}

function errorDetail(res: TransportResponse): string {
  try {
    const doc = decodeJson(res.body) as { detail?: unknown };
    if (doc && doc.detail !== undefined) return JSON.stringify(doc.detail);
  } catch {
    /* non-JSON error body */
  }
  return new TextDecoder().decode(res.body);
}

export function fetchTransport(baseUrl: string): Transport {
  return async (req) => {
    const res = await fetch(baseUrl + req.path, {
      method: req.method,
      headers: { "content-type": "application/json", ...(req.headers ?? {}) },
      body: req.body,
    });
    const headers: Record<string, string> = {};
    res.headers.forEach((v, k) => (headers[k.toLowerCase()] = v));
    return {
      status: res.status,
      headers,
      body: new Uint8Array(await res.arrayBuffer()),
    };
  };
}

export class PreviewClient {
  private etags = new Map<string, { etag: string; frame: FrameResponse }>();

  constructor(private transport: Transport) {}

  async getState(): Promise<SessionState> {
    const res = await this.transport({ method: "GET", path: "/state" });
    if (res.status !== 200) throw new ServiceError(res.status, errorDetail(res));
    return StateSchema.parse(decodeJson(res.body));
  }

  /** Replace the trajectory; resolves to the new revision. */
  async putTrajectory(spec: Trajectory): Promise<number> {
    const res = await this.transport({
      method: "PUT",
      path: "/trajectory",
      body: JSON.stringify(spec),
    });
    if (res.status !== 200) throw new ServiceError(res.status, errorDetail(res));
    return RevisionSchema.parse(decodeJson(res.body)).revision;
  }

  /**
   * Fetch one frame; sends If-None-Match when the same request was seen
   * before and transparently reuses the cached bytes on 304.
   */
  async getFrame(
    index: number,
    mode: PreviewMode = "composite",
    scale = 1.0,
  ): Promise<FrameResponse> {
    const path = `/frame/${index}?mode=${mode}&scale=${scale}`;
    const cached = this.etags.get(path);
    const headers: Record<string, string> = {};
    if (cached) headers["if-none-match"] = cached.etag;
    const res = await this.transport({ method: "GET", path, headers });
    if (res.status === 304 && cached) {
      return { ...cached.frame, notModified: true };
    }
    if (res.status !== 200) throw new ServiceError(res.status, errorDetail(res));
    const revision = Number(res.headers["x-revision"]);
    if (!Number.isInteger(revision)) {
      throw new ServiceError(200, "missing X-Revision header");
    }
    const frame: FrameResponse = {
      bytes: res.body,
      revision,
      digest: res.headers["x-content-digest"] ?? "",
      etag: res.headers["etag"] ?? "",
      notModified: false,
    };
    if (frame.etag) this.etags.set(path, { etag: frame.etag, frame });
    return frame;
  }
}
