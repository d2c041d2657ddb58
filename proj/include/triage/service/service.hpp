#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "triage/common/error.hpp"
#include "triage/common/time.hpp"
#include "triage/dialogue/planning.hpp"
#include "triage/dialogue/session.hpp"
#include "triage/infer/engine.hpp"
#include "triage/kbase/knowledge_base.hpp"
#include "triage/learn/mlp.hpp"
#include "triage/learn/pso.hpp"
#include "triage/store/store.hpp"

namespace httplib {
class Server;
}

namespace triage::service {

inline constexpr std::size_t kMaxMediaBytes = 2 * 1024 * 1024;

struct LearnDefaults {
  int hidden = 16;
  int epochs = 500;
  double learning_rate = 0.5;
  learn::PsoParams pso;
};

// Settings an admin may change at runtime.
struct Settings {
  infer::TriageThresholds thresholds;
  double alpha = 0.5;  // rule weight when blending with a trained model
  LearnDefaults learn;
  dialogue::AcoParams aco;

  // Throws Error(InvalidParams).
  void validate() const;
};

struct AdminBootstrap {
  std::string email;
  std::string password;
};

struct ApiConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string store_dir = "triage-data";
  Settings settings;
  std::optional<AdminBootstrap> admin;
  Clock clock = system_now;  // not serialized

  void validate() const;
};

nlohmann::json settings_to_json(const Settings& s);
// Starts from `base`, overriding the fields present in `j`.
Settings settings_from_json(const nlohmann::json& j, const Settings& base = {});
nlohmann::json config_to_json(const ApiConfig& c);
ApiConfig config_from_json(const nlohmann::json& j);

// Maps an error code to the HTTP status used in API error bodies.
int http_status(ErrorCode code);

class Service {
 public:
  // Opens the store, loads (or seeds) the knowledge base, restores settings and
  // sessions, and registers the bootstrap admin. Throws Error(IoFailure).
  explicit Service(ApiConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and starts serving on a background thread; returns the bound port.
  // Throws Error(IoFailure) on bind failure.
  int start();
  // Blocks until stop().
  void wait();
  void stop();

  store::Store& store() { return *store_; }
  std::shared_ptr<const kbase::KnowledgeBase> kb() const;
  Settings settings() const;

 private:
  struct SessionSlot {
    std::mutex mu;
    dialogue::Session session;
  };
  struct Job {
    std::mutex mu;
    nlohmann::json status;
  };
  struct Model {
    learn::Mlp mlp;
    std::vector<std::string> symptom_ids;
    std::vector<std::string> condition_ids;
    std::int64_t kb_version = 0;
  };

  void routes();
  std::shared_ptr<SessionSlot> find_session(const std::string& id, const store::AuthToken& who);
  void persist(const dialogue::Session& s);
  nlohmann::json hybrid_ranking(const dialogue::Session& s, const kbase::KnowledgeBase& kb, double alpha) const;
  nlohmann::json stats() const;
  void run_job(std::string job_id, nlohmann::json request);

  ApiConfig config_;
  std::unique_ptr<store::Store> store_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;

  mutable std::mutex kb_mu_;
  std::shared_ptr<const kbase::KnowledgeBase> kb_;
  mutable std::mutex settings_mu_;
  Settings settings_;
  mutable std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
  mutable std::mutex model_mu_;
  std::shared_ptr<const Model> model_;
  mutable std::mutex jobs_mu_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::vector<std::thread> workers_;
  std::uint64_t job_seq_ = 0;
};

}  // namespace triage::service
