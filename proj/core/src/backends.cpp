#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "pdgen/backends.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

namespace pdgen {
namespace {

using nlohmann::json;

std::string drop_carriage_returns(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c != '\r') out.push_back(c);
  }
  return out;
}

json detections_to_json_array(const std::vector<Detection>& detections) {
  json arr = json::array();
  for (const auto& det : detections) {
    arr.push_back({{"label", det.label},
                   {"box", json::array({det.box.x, det.box.y, det.box.w, det.box.h})},
                   {"score", det.score}});
  }
  return arr;
}

std::vector<Detection> detections_from_json_array(const json& arr) {
  std::vector<Detection> out;
  for (const auto& dj : arr) {
    Detection det;
    det.label = dj.at("label").get<std::string>();
    const auto& box = dj.at("box");
    det.box = {box.at(0).get<double>(), box.at(1).get<double>(), box.at(2).get<double>(),
               box.at(3).get<double>()};
    det.score = dj.value("score", 1.0);
    out.push_back(std::move(det));
  }
  return out;
}

json request_json(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"content", normalize_content(m.content)}, {"role", m.role}});
  }
  return {{"kind", "chat"},
          {"max_tokens", request.max_tokens},
          {"messages", std::move(messages)},
          {"temperature", request.temperature}};
}

json request_json(const DetectionRequest& request) {
  return {{"image", request.image_ref}, {"kind", "detect"}, {"query", request.query}};
}

json request_json(const CaptionRequest& request) {
  return {{"box", json::array({request.box.x, request.box.y, request.box.w, request.box.h})},
          {"image", request.image_ref},
          {"kind", "caption"},
          {"prompt", drop_carriage_returns(request.prompt)}};
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path fixture_path(const std::filesystem::path& dir, const std::string& kind,
                                   const std::string& fp) {
  return dir / (kind + "-" + fp + ".json");
}

json load_fixture_response(const BackendConfig& config, const std::string& kind,
                           const std::string& fp) {
  const std::filesystem::path path = fixture_path(config.fixture_dir, kind, fp);
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FixtureMiss("no recorded " + kind + " fixture " + fp + " under " +
                      config.fixture_dir.string());
  }
  try {
    json j = json::parse(in);
    return j.at("response");
  } catch (const json::exception& e) {
    throw BackendError("fixture " + path.string() + " is malformed: " + e.what());
  }
}

void write_fixture(const BackendConfig& config, const std::string& kind, const json& request,
                   const json& response) {
  std::filesystem::create_directories(config.fixture_dir);
  const std::string fp = fingerprint_text(request.dump());
  json j = {{"kind", kind},
            {"recorded_at", utc_now()},
            {"request", request},
            {"response", response}};
  std::ofstream out(fixture_path(config.fixture_dir, kind, fp), std::ios::binary);
  if (!out) {
    throw BackendError("cannot write fixture under " + config.fixture_dir.string());
  }
  out << j.dump(2) << "\n";
}

}  // namespace

BackendMode backend_mode_from_string(const std::string& text) {
  if (text == "live") return BackendMode::Live;
  if (text == "replay") return BackendMode::Replay;
  if (text == "record") return BackendMode::Record;
  if (text == "scripted") return BackendMode::Scripted;
  throw Error("unknown backend mode '" + text + "'");
}

std::string_view to_string(BackendMode mode) {
  switch (mode) {
    case BackendMode::Live: return "live";
    case BackendMode::Replay: return "replay";
    case BackendMode::Record: return "record";
    case BackendMode::Scripted: return "scripted";
  }
  return "replay";
}

std::string normalize_content(const std::string& text) {
  const std::string lf = drop_carriage_returns(text);
  std::string out;
  out.reserve(lf.size());
  std::size_t start = 0;
  while (start <= lf.size()) {
    std::size_t end = lf.find('\n', start);
    const bool last = end == std::string::npos;
    if (last) end = lf.size();
    std::size_t stop = end;
    while (stop > start && (lf[stop - 1] == ' ' || lf[stop - 1] == '\t')) --stop;
    out.append(lf, start, stop - start);
    if (last) break;
    out.push_back('\n');
    start = end + 1;
  }
  return out;
}

std::string canonical_request(const ChatRequest& request) { return request_json(request).dump(); }
std::string canonical_request(const DetectionRequest& request) {
  return request_json(request).dump();
}
std::string canonical_request(const CaptionRequest& request) {
  return request_json(request).dump();
}

std::string fingerprint_text(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr)) {
    throw BackendError("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

// --- ScriptedBackend -------------------------------------------------------

void ScriptedBackend::push_chat(std::string content) {
  chat_queue_.push_back(std::move(content));
}
void ScriptedBackend::push_detections(std::vector<Detection> detections) {
  detection_queue_.push_back(std::move(detections));
}
void ScriptedBackend::push_caption(std::string content) {
  caption_queue_.push_back(std::move(content));
}

ChatResponse ScriptedBackend::chat(const ChatRequest& request) {
  chat_log_.push_back(request);
  if (chat_queue_.empty()) {
    throw QueueExhausted("scripted backend has no chat response queued (call " +
                         std::to_string(chat_log_.size()) + ")");
  }
  ChatResponse response{std::move(chat_queue_.front())};
  chat_queue_.pop_front();
  return response;
}

std::vector<Detection> ScriptedBackend::detect(const DetectionRequest& request) {
  detect_log_.push_back(request);
  if (detection_queue_.empty()) {
    throw QueueExhausted("scripted backend has no detection response queued (call " +
                         std::to_string(detect_log_.size()) + ")");
  }
  std::vector<Detection> response = std::move(detection_queue_.front());
  detection_queue_.pop_front();
  return response;
}

std::string ScriptedBackend::caption(const CaptionRequest& request) {
  caption_log_.push_back(request);
  if (caption_queue_.empty()) {
    throw QueueExhausted("scripted backend has no caption response queued (call " +
                         std::to_string(caption_log_.size()) + ")");
  }
  std::string response = std::move(caption_queue_.front());
  caption_queue_.pop_front();
  return response;
}

// --- ReplayBackend ---------------------------------------------------------

ReplayBackend::ReplayBackend(BackendConfig config) : config_(std::move(config)) {}

ChatResponse ReplayBackend::chat(const ChatRequest& request) {
  json response = load_fixture_response(config_, "chat", fingerprint(request));
  return {response.at("content").get<std::string>()};
}

std::vector<Detection> ReplayBackend::detect(const DetectionRequest& request) {
  json response = load_fixture_response(config_, "detect", fingerprint(request));
  return detections_from_json_array(response.at("detections"));
}

std::string ReplayBackend::caption(const CaptionRequest& request) {
  json response = load_fixture_response(config_, "caption", fingerprint(request));
  return response.at("content").get<std::string>();
}

// --- LiveBackend -----------------------------------------------------------

std::atomic<std::uint64_t> LiveBackend::network_requests_{0};

LiveBackend::LiveBackend(BackendConfig config) : config_(std::move(config)) {}

std::uint64_t LiveBackend::network_requests() noexcept { return network_requests_.load(); }

std::string LiveBackend::post(const std::string& path, const std::string& body) {
  if (config_.endpoint.empty()) {
    throw BackendUnavailable("live backend has no endpoint configured");
  }
  httplib::Headers headers;
  if (!config_.auth_env.empty()) {
    const char* token = std::getenv(config_.auth_env.c_str());
    if (!token) {
      throw CredentialMissing("environment variable '" + config_.auth_env +
                              "' is not set; it must hold the API token");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(config_.request_timeout);
  client.set_read_timeout(config_.request_timeout);
  client.set_write_timeout(config_.request_timeout);

  ++network_requests_;
  httplib::Result result = client.Post(path, headers, body, "application/json");
  if (!result) {
    throw BackendUnavailable("no response from " + config_.endpoint + path + ": " +
                             httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw BackendUnavailable("HTTP " + std::to_string(result->status) + " from " +
                             config_.endpoint + path + ": " + result->body);
  }
  return result->body;
}

ChatResponse LiveBackend::chat(const ChatRequest& request) {
  const std::string body = post("/v1/chat", canonical_request(request));
  try {
    return {json::parse(body).at("content").get<std::string>()};
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed chat response: ") + e.what());
  }
}

std::vector<Detection> LiveBackend::detect(const DetectionRequest& request) {
  const std::string body = post("/v1/detect", canonical_request(request));
  try {
    return detections_from_json_array(json::parse(body).at("detections"));
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed detection response: ") + e.what());
  }
}

std::string LiveBackend::caption(const CaptionRequest& request) {
  const std::string body = post("/v1/caption", canonical_request(request));
  try {
    return json::parse(body).at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed caption response: ") + e.what());
  }
}

// --- RecordBackend ---------------------------------------------------------

RecordBackend::RecordBackend(std::unique_ptr<Backend> inner, BackendConfig config)
    : inner_(std::move(inner)), config_(std::move(config)) {}

ChatResponse RecordBackend::chat(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  ChatResponse response = inner_->chat(request);
  write_fixture(config_, "chat", request_json(request), {{"content", response.content}});
  return response;
}

std::vector<Detection> RecordBackend::detect(const DetectionRequest& request) {
  std::lock_guard lock(mutex_);
  std::vector<Detection> response = inner_->detect(request);
  write_fixture(config_, "detect", request_json(request),
                {{"detections", detections_to_json_array(response)}});
  return response;
}

std::string RecordBackend::caption(const CaptionRequest& request) {
  std::lock_guard lock(mutex_);
  std::string response = inner_->caption(request);
  write_fixture(config_, "caption", request_json(request), {{"content", response}});
  return response;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  switch (config.mode) {
    case BackendMode::Scripted:
      return std::make_unique<ScriptedBackend>();
    case BackendMode::Replay:
      return std::make_unique<ReplayBackend>(config);
    case BackendMode::Live:
      return std::make_unique<LiveBackend>(config);
    case BackendMode::Record:
      return std::make_unique<RecordBackend>(std::make_unique<LiveBackend>(config), config);
  }
  throw Error("unhandled backend mode");
}

}  // namespace pdgen
