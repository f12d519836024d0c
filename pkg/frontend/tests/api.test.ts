import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, StaleVersionError } from "../src/api.js";
import { MockService } from "./mock_service.js";

describe("ApiClient", () => {
  it("fetches the model card", async () => {
    const mock = new MockService();
    const client = new ApiClient("", mock.fetch);
    const model = await client.getModel();
    expect(model.version).toBe(1);
    expect(model.hyper.delta).toBe(5);
    expect(model.frame_length).toBe(400);
  });

  it("passes range and smoothing parameters through", async () => {
    const mock = new MockService();
    const client = new ApiClient("", mock.fetch);
    const scores = await client.getScores(10, 50, 3);
    expect(scores.from).toBe(10);
    expect(scores.to).toBe(50);
    expect(scores.aggregated).toHaveLength(40);
    expect(mock.requests.at(-1)).toContain("from=10");
    expect(mock.requests.at(-1)).toContain("smoothing=3");
  });

  it("maps 409 to StaleVersionError", async () => {
    const mock = new MockService();
    const client = new ApiClient("", mock.fetch);
    await expect(
      client.postFeedback({ window: [0, 30], verdict: "normal", version: 42 }),
    ).rejects.toBeInstanceOf(StaleVersionError);
  });

  it("maps other failures to ApiError with the status", async () => {
    const mock = new MockService();
    const client = new ApiClient("", mock.fetch);
    try {
      await client.getWindow(99999);
      expect.unreachable();
    } catch (error) {
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).status).toBe(422);
    }
  });

  it("submits feedback and receives the new version", async () => {
    const mock = new MockService();
    const client = new ApiClient("", mock.fetch);
    const result = await client.postFeedback({
      window: [100, 140],
      verdict: "normal",
      version: 1,
    });
    expect(result.new_version).toBe(2);
    expect(mock.activeVersion).toBe(2);
  });
});
