#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "pdgen/scene.hpp"

namespace pdgen {

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1024;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct ChatResponse {
  std::string content;
};

struct DetectionRequest {
  std::string image_ref;
  std::string query;  // elaborated phrases, see build_query()
};

struct CaptionRequest {
  std::string image_ref;
  BoundingBox box;
  std::string prompt;
};

enum class BackendMode { Live, Replay, Record, Scripted };

BackendMode backend_mode_from_string(const std::string& text);
std::string_view to_string(BackendMode mode);

struct BackendConfig {
  BackendMode mode = BackendMode::Replay;
  std::string endpoint;  // e.g. "http://127.0.0.1:8080"
  std::string auth_env = "PDGEN_API_KEY";
  std::filesystem::path fixture_dir;
  std::chrono::milliseconds request_timeout{30'000};
};

class BackendError : public Error {
 public:
  using Error::Error;
};

/// Scripted backend ran out of queued responses.
class QueueExhausted : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Replay directory holds no fixture for the request fingerprint.
class FixtureMiss : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Transport or server failure on a live request.
class BackendUnavailable : public BackendError {
 public:
  using BackendError::BackendError;
};

/// The configured credential environment variable is not set.
class CredentialMissing : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Newlines normalized to LF and per-line trailing whitespace removed, as
/// applied to chat message contents before fingerprinting.
std::string normalize_content(const std::string& text);

/// Canonical JSON (sorted keys, compact) identifying a request. Chat message
/// contents are whitespace-normalized; caption prompts only have their line
/// endings normalized, since trailing spaces there are meaningful.
std::string canonical_request(const ChatRequest& request);
std::string canonical_request(const DetectionRequest& request);
std::string canonical_request(const CaptionRequest& request);

/// Lowercase SHA-256 hex digest.
std::string fingerprint_text(const std::string& text);

template <typename Request>
std::string fingerprint(const Request& request) {
  return fingerprint_text(canonical_request(request));
}

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse chat(const ChatRequest& request) = 0;
  virtual std::vector<Detection> detect(const DetectionRequest& request) = 0;
  virtual std::string caption(const CaptionRequest& request) = 0;
};

/// Serves pre-queued responses and records every request, for tests.
class ScriptedBackend : public Backend {
 public:
  void push_chat(std::string content);
  void push_detections(std::vector<Detection> detections);
  void push_caption(std::string content);

  ChatResponse chat(const ChatRequest& request) override;
  std::vector<Detection> detect(const DetectionRequest& request) override;
  std::string caption(const CaptionRequest& request) override;

  const std::vector<ChatRequest>& chat_requests() const noexcept { return chat_log_; }
  const std::vector<DetectionRequest>& detect_requests() const noexcept { return detect_log_; }
  const std::vector<CaptionRequest>& caption_requests() const noexcept { return caption_log_; }
  std::size_t chat_calls() const noexcept { return chat_log_.size(); }
  std::size_t detect_calls() const noexcept { return detect_log_.size(); }
  std::size_t caption_calls() const noexcept { return caption_log_.size(); }

 private:
  std::deque<std::string> chat_queue_;
  std::deque<std::vector<Detection>> detection_queue_;
  std::deque<std::string> caption_queue_;
  std::vector<ChatRequest> chat_log_;
  std::vector<DetectionRequest> detect_log_;
  std::vector<CaptionRequest> caption_log_;
};

/// Serves responses from fixture files recorded earlier; never touches the
/// network. Fixture files are named "<kind>-<fingerprint>.json".
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(BackendConfig config);

  ChatResponse chat(const ChatRequest& request) override;
  std::vector<Detection> detect(const DetectionRequest& request) override;
  std::string caption(const CaptionRequest& request) override;

 private:
  BackendConfig config_;
};

/// Talks HTTP to a model server: POST {endpoint}/v1/chat, /v1/detect,
/// /v1/caption with the canonical request JSON as the body.
class LiveBackend : public Backend {
 public:
  explicit LiveBackend(BackendConfig config);

  ChatResponse chat(const ChatRequest& request) override;
  std::vector<Detection> detect(const DetectionRequest& request) override;
  std::string caption(const CaptionRequest& request) override;

  /// Process-wide count of HTTP requests attempted by any LiveBackend;
  /// lets tests prove that replay runs stay off the network.
  static std::uint64_t network_requests() noexcept;

 private:
  std::string post(const std::string& path, const std::string& body);

  BackendConfig config_;
  static std::atomic<std::uint64_t> network_requests_;
};

/// Forwards to an inner backend and writes one fixture file per response,
/// producing the material ReplayBackend serves later.
class RecordBackend : public Backend {
 public:
  RecordBackend(std::unique_ptr<Backend> inner, BackendConfig config);

  ChatResponse chat(const ChatRequest& request) override;
  std::vector<Detection> detect(const DetectionRequest& request) override;
  std::string caption(const CaptionRequest& request) override;

 private:
  std::unique_ptr<Backend> inner_;
  BackendConfig config_;
  std::mutex mutex_;
};

/// Build the backend the config's mode names. Record mode wraps a live
/// backend; scripted starts with empty queues.
std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace pdgen
