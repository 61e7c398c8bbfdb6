#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/serialize.hpp"
#include "tabprompt/verbalize.hpp"

namespace tabprompt {

struct PredictorConfig {
  enum class Kind { mock, remote };
  Kind kind = Kind::mock;

  // mock: keyword-logistic scorer
  std::map<std::string, double> mock_weights;
  double mock_bias = 0.0;

  // remote: one POST per prompt
  std::string endpoint_url;
  std::string auth_env_var;
  double timeout_seconds = 30.0;
  std::size_t max_in_flight = 4;
  std::size_t max_attempts = 3;
  double backoff_initial_seconds = 0.5;
  double backoff_multiplier = 2.0;

  void validate() const {
    if (kind == Kind::remote) {
      if (endpoint_url.empty()) throw ValidationError("remote predictor requires endpoint_url");
      if (max_in_flight == 0) throw ValidationError("max_in_flight must be positive");
      if (max_attempts == 0) throw ValidationError("max_attempts must be positive");
      if (!(timeout_seconds > 0)) throw ValidationError("timeout must be positive");
      if (backoff_initial_seconds < 0 || backoff_multiplier < 1)
        throw ValidationError("backoff must be nonnegative with multiplier >= 1");
    }
    for (const auto& [w, v] : mock_weights) {
      if (w.empty()) throw ValidationError("mock keyword must be nonempty");
      if (!std::isfinite(v)) throw ValidationError("mock weight for '" + w + "' is not finite");
    }
    if (!std::isfinite(mock_bias)) throw ValidationError("mock bias is not finite");
  }
};

/// The credential env var is unset or empty. A configuration problem, so it
/// surfaces as a validation error.
class CredentialError : public ValidationError {
public:
  CredentialError(const std::string& var, std::optional<std::size_t> row)
      : ValidationError("credential environment variable '" + var + "' is not set" +
                        (row ? " (row " + std::to_string(*row) + ")" : std::string())),
        row_(row) {}
  std::optional<std::size_t> row() const { return row_; }

private:
  std::optional<std::size_t> row_;
};

class PredictionError : public RuntimeFailure {
public:
  enum class Kind { timeout, http_status, bad_response };

  PredictionError(Kind kind, std::size_t row, const std::string& detail)
      : RuntimeFailure(std::string(kind_name(kind)) + " for row " + std::to_string(row) + ": " + detail),
        kind_(kind),
        row_(row) {}

  Kind kind() const { return kind_; }
  std::size_t row() const { return row_; }

  static std::string_view kind_name(Kind k) {
    switch (k) {
      case Kind::timeout: return "request failed after retries";
      case Kind::http_status: return "endpoint returned an error status";
      case Kind::bad_response: return "unparseable endpoint response";
    }
    return "prediction error";
  }

private:
  Kind kind_;
  std::size_t row_;
};

namespace detail {

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

}  // namespace detail

/// s = bias + sum of weights whose keyword occurs (case-insensitively) in the
/// serialized row; probability = sigmoid(s).
inline PredictionScore mock_score(const Prompt& prompt, const PredictorConfig& config) {
  const auto haystack = detail::ascii_lower(prompt.serialized_row);
  double s = config.mock_bias;
  for (const auto& [keyword, weight] : config.mock_weights)
    if (haystack.find(detail::ascii_lower(keyword)) != std::string::npos) s += weight;
  const double p = detail::sigmoid(s);
  return {p, p > 0.5 ? prompt.answer_choices[1] : prompt.answer_choices[0], false};
}

/// Interprets an endpoint reply: {"scores": [neg, pos]} or {"text": "..."}.
/// Nonnegative scores are normalized; if either is negative they are taken
/// as log-probabilities.
inline PredictionScore interpret_response(const std::string& body, const Verbalizer& verbalizer) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("body is not a JSON object");
  if (j.contains("scores")) {
    const auto& s = j["scores"];
    if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
      throw std::invalid_argument("'scores' must be an array of two numbers");
    const double neg = s[0].get<double>(), pos = s[1].get<double>();
    if (!std::isfinite(neg) || !std::isfinite(pos)) throw std::invalid_argument("non-finite score");
    double p;
    if (neg < 0 || pos < 0) {
      p = detail::sigmoid(pos - neg);
    } else {
      if (neg + pos <= 0) throw std::invalid_argument("scores sum to zero");
      p = pos / (neg + pos);
    }
    return {std::clamp(p, 0.0, 1.0), s.dump(), false};
  }
  if (j.contains("text") && j["text"].is_string()) return map_output(j["text"].get<std::string>(), verbalizer);
  throw std::invalid_argument("response has neither 'scores' nor 'text'");
}

/// Counting semaphore bounding concurrent requests.
class InFlightLimiter {
public:
  explicit InFlightLimiter(std::size_t limit) : limit_(limit) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return active_ < limit_; });
    ++active_;
    peak_ = std::max(peak_, active_);
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      --active_;
    }
    cv_.notify_one();
  }
  std::size_t peak() const {
    std::lock_guard lock(mu_);
    return peak_;
  }

private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t limit_;
  std::size_t active_ = 0;
  std::size_t peak_ = 0;
};

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Endpoint parse_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint_url '" + url + "' has no scheme");
  auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ValidationError("endpoint_url '" + url + "' must use http or https");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw ValidationError("this build has no TLS support for '" + url + "'");
#endif
  auto slash = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, slash);
  e.path = slash == std::string::npos ? "/" : url.substr(slash);
  if (e.origin.size() <= scheme_end + 3) throw ValidationError("endpoint_url '" + url + "' has no host");
  return e;
}

/// Client for the inference endpoint. One instance is shared by a whole run
/// so max_in_flight bounds every request it makes, across grid cells.
class RemotePredictor {
public:
  RemotePredictor(PredictorConfig config, Verbalizer verbalizer)
      : config_(std::move(config)), verbalizer_(std::move(verbalizer)), limiter_(config_.max_in_flight) {
    config_.validate();
    endpoint_ = parse_endpoint(config_.endpoint_url);
    if (!config_.auth_env_var.empty()) {
      const char* token = std::getenv(config_.auth_env_var.c_str());
      if (!token || !*token) throw CredentialError(config_.auth_env_var, std::nullopt);
      token_ = token;
    }
  }

  PredictionScore score(const Prompt& prompt, std::size_t row) {
    limiter_.acquire();
    struct Release {
      InFlightLimiter& l;
      ~Release() { l.release(); }
    } release{limiter_};
    return attempt_all(prompt, row);
  }

  /// Scores prompts concurrently; results line up with `prompts`. The first
  /// failure is rethrown once all workers stop.
  std::vector<PredictionScore> score_all(const std::vector<Prompt>& prompts, const std::vector<std::size_t>& rows) {
    std::vector<PredictionScore> out(prompts.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
      for (std::size_t i; !failed && (i = next++) < prompts.size();) {
        try {
          out[i] = score(prompts[i], rows.at(i));
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    };
    const std::size_t n_workers = std::min(config_.max_in_flight, prompts.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
  }

  std::size_t peak_in_flight() const { return limiter_.peak(); }

private:
  PredictionScore attempt_all(const Prompt& prompt, std::size_t row) {
    nlohmann::json body;
    body["input"] = prompt.text();
    body["choices"] = {prompt.answer_choices[0], prompt.answer_choices[1]};
    const auto payload = body.dump();

    httplib::Client client(endpoint_.origin);
    const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    if (!token_.empty()) client.set_bearer_token_auth(token_);

    std::string last_error;
    bool last_was_status = false;
    double delay = config_.backoff_initial_seconds;
    for (std::size_t attempt = 0; attempt < config_.max_attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        delay *= config_.backoff_multiplier;
      }
      auto res = client.Post(endpoint_.path, payload, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        last_was_status = false;
        continue;
      }
      if (res->status >= 500 || res->status == 429) {
        last_error = "HTTP " + std::to_string(res->status);
        last_was_status = true;
        continue;
      }
      if (res->status < 200 || res->status >= 300)
        throw PredictionError(PredictionError::Kind::http_status, row, "HTTP " + std::to_string(res->status));
      try {
        return interpret_response(res->body, verbalizer_);
      } catch (const std::exception& e) {
        throw PredictionError(PredictionError::Kind::bad_response, row, e.what());
      }
    }
    throw PredictionError(last_was_status ? PredictionError::Kind::http_status : PredictionError::Kind::timeout, row,
                          last_error + " (" + std::to_string(config_.max_attempts) + " attempts)");
  }

  PredictorConfig config_;
  Verbalizer verbalizer_;
  InFlightLimiter limiter_;
  Endpoint endpoint_;
  std::string token_;
};

/// Single-prompt convenience over RemotePredictor.
inline PredictionScore remote_score(const Prompt& prompt, const PredictorConfig& config, std::size_t row = 0,
                                    const Verbalizer& verbalizer = {}) {
  if (config.kind != PredictorConfig::Kind::remote) throw ValidationError("remote_score needs a remote predictor");
  if (!config.auth_env_var.empty()) {
    const char* token = std::getenv(config.auth_env_var.c_str());
    if (!token || !*token) throw CredentialError(config.auth_env_var, row);
  }
  RemotePredictor client(config, verbalizer);
  return client.score(prompt, row);
}

/// Mock or remote scoring behind one call.
class Predictor {
public:
  Predictor(PredictorConfig config, Verbalizer verbalizer) : config_(std::move(config)) {
    config_.validate();
    if (config_.kind == PredictorConfig::Kind::remote)
      remote_ = std::make_unique<RemotePredictor>(config_, std::move(verbalizer));
  }

  std::vector<PredictionScore> score_all(const std::vector<Prompt>& prompts, const std::vector<std::size_t>& rows) {
    if (remote_) return remote_->score_all(prompts, rows);
    std::vector<PredictionScore> out;
    out.reserve(prompts.size());
    for (const auto& p : prompts) out.push_back(mock_score(p, config_));
    return out;
  }

  const PredictorConfig& config() const { return config_; }

private:
  PredictorConfig config_;
  std::unique_ptr<RemotePredictor> remote_;
};

inline PredictorConfig predictor_from_json(const nlohmann::json& j) {
  PredictorConfig c;
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "mock") {
      c.kind = PredictorConfig::Kind::mock;
      if (!j.contains("mock_weights")) throw ValidationError("mock predictor requires mock_weights");
      c.mock_weights = j["mock_weights"].get<std::map<std::string, double>>();
      c.mock_bias = j.value("mock_bias", 0.0);
    } else if (kind == "remote") {
      c.kind = PredictorConfig::Kind::remote;
      c.endpoint_url = j.value("endpoint_url", std::string());
      c.auth_env_var = j.value("auth_env_var", std::string());
      c.timeout_seconds = j.value("timeout", c.timeout_seconds);
      c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
      c.max_attempts = j.value("max_attempts", c.max_attempts);
      c.backoff_initial_seconds = j.value("backoff_initial", c.backoff_initial_seconds);
      c.backoff_multiplier = j.value("backoff_multiplier", c.backoff_multiplier);
    } else {
      throw ValidationError("predictor kind must be 'mock' or 'remote', got '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid predictor: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace tabprompt
