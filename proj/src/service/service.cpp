#include "triage/service/service.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <algorithm>
#include <set>

#include "triage/common/error.hpp"
#include "triage/dialogue/session_json.hpp"
#include "triage/infer/infer_json.hpp"
#include "triage/kbase/kb_json.hpp"
#include "triage/kbase/seed.hpp"
#include "triage/learn/dataset.hpp"
#include "triage/learn/kmeans.hpp"
#include "triage/media/audio.hpp"
#include "triage/media/codec.hpp"
#include "triage/media/image.hpp"

namespace triage::service {

using nlohmann::json;

namespace {

// Errors raised by the HTTP layer itself, outside the domain error codes.
struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void http_fail(int status, std::string code, std::string message) {
  throw HttpError{status, std::move(code), std::move(message)};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    http_fail(400, "bad_request", std::string("request body is not JSON: ") + e.what());
  }
}

std::string base64_decode(const std::string& in) {
  std::string clean;
  for (char c : in)
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  if (clean.size() % 4 != 0) throw Error(ErrorCode::ParseError, "base64 payload length is not a multiple of 4");
  std::string out(clean.size() / 4 * 3, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
  if (n < 0) throw Error(ErrorCode::ParseError, "payload is not valid base64");
  std::size_t len = static_cast<std::size_t>(n);
  if (!clean.empty() && clean.back() == '=') --len;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

json thresholds_json(const infer::TriageThresholds& t) {
  json j;
  infer::to_json(j, t);
  return j;
}

json decision_json(const infer::TriageDecision& d) {
  json j;
  infer::to_json(j, d);
  return j;
}

template <class T>
T field(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

learn::PsoParams pso_from_json(const json& j, learn::PsoParams p) {
  p.swarm = field(j, "swarm", p.swarm);
  p.iterations = field(j, "iterations", p.iterations);
  p.inertia = field(j, "inertia", p.inertia);
  p.c1 = field(j, "c1", p.c1);
  p.c2 = field(j, "c2", p.c2);
  p.velocity_clamp = field(j, "velocity_clamp", p.velocity_clamp);
  p.init_range = field(j, "init_range", p.init_range);
  p.seed = field(j, "seed", p.seed);
  return p;
}

dialogue::AcoParams aco_from_json(const json& j, dialogue::AcoParams p) {
  p.ants = field(j, "ants", p.ants);
  p.iterations = field(j, "iterations", p.iterations);
  p.alpha = field(j, "alpha", p.alpha);
  p.beta = field(j, "beta", p.beta);
  p.rho = field(j, "rho", p.rho);
  p.q = field(j, "q", p.q);
  p.population_size = field(j, "population_size", p.population_size);
  p.seed = field(j, "seed", p.seed);
  return p;
}

}  // namespace

// ---- settings and config ----

void Settings::validate() const {
  thresholds.validate();
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidParams, "alpha must lie in [0, 1]");
  if (learn.hidden < 1 || learn.epochs < 1 || !(learn.learning_rate > 0.0))
    throw Error(ErrorCode::InvalidParams, "learn defaults need hidden, epochs >= 1 and learning_rate > 0");
  learn.pso.validate();
  aco.validate();
}

void ApiConfig::validate() const {
  if (port < 0 || port > 65535) throw Error(ErrorCode::InvalidParams, "port must lie in [0, 65535]");
  if (store_dir.empty()) throw Error(ErrorCode::InvalidParams, "store_dir must be set");
  settings.validate();
}

json settings_to_json(const Settings& s) {
  const auto& p = s.learn.pso;
  const auto& a = s.aco;
  return {{"thresholds", thresholds_json(s.thresholds)},
          {"alpha", s.alpha},
          {"learn",
           {{"hidden", s.learn.hidden},
            {"epochs", s.learn.epochs},
            {"learning_rate", s.learn.learning_rate},
            {"pso",
             {{"swarm", p.swarm},
              {"iterations", p.iterations},
              {"inertia", p.inertia},
              {"c1", p.c1},
              {"c2", p.c2},
              {"velocity_clamp", p.velocity_clamp},
              {"init_range", p.init_range},
              {"seed", p.seed}}}}},
          {"aco",
           {{"ants", a.ants},
            {"iterations", a.iterations},
            {"alpha", a.alpha},
            {"beta", a.beta},
            {"rho", a.rho},
            {"q", a.q},
            {"population_size", a.population_size},
            {"seed", a.seed}}}};
}

Settings settings_from_json(const json& j, const Settings& base) {
  Settings s = base;
  try {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "settings must be a JSON object");
    if (j.contains("thresholds")) {
      json merged = thresholds_json(s.thresholds);
      merged.update(j.at("thresholds"));
      infer::from_json(merged, s.thresholds);
    }
    s.alpha = field(j, "alpha", s.alpha);
    if (j.contains("learn")) {
      const auto& l = j.at("learn");
      s.learn.hidden = field(l, "hidden", s.learn.hidden);
      s.learn.epochs = field(l, "epochs", s.learn.epochs);
      s.learn.learning_rate = field(l, "learning_rate", s.learn.learning_rate);
      if (l.contains("pso")) s.learn.pso = pso_from_json(l.at("pso"), s.learn.pso);
    }
    if (j.contains("aco")) s.aco = aco_from_json(j.at("aco"), s.aco);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed settings: ") + e.what());
  }
  return s;
}

json config_to_json(const ApiConfig& c) {
  json j = {{"host", c.host}, {"port", c.port}, {"store_dir", c.store_dir}};
  j.update(settings_to_json(c.settings));
  if (c.admin) j["admin"] = {{"email", c.admin->email}, {"password", c.admin->password}};
  return j;
}

ApiConfig config_from_json(const json& j) {
  ApiConfig c;
  try {
    c.host = field(j, "host", c.host);
    c.port = field(j, "port", c.port);
    c.store_dir = field(j, "store_dir", c.store_dir);
    c.settings = settings_from_json(j, c.settings);
    if (j.contains("admin") && !j.at("admin").is_null())
      c.admin = AdminBootstrap{j.at("admin").at("email").get<std::string>(),
                               j.at("admin").at("password").get<std::string>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::EmptyQuery:
      return 400;
    case ErrorCode::InvalidCredentials:
    case ErrorCode::Expired:
      return 401;
    case ErrorCode::UnknownUser:
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::SessionFinalized:
    case ErrorCode::DuplicateAnswer:
    case ErrorCode::DuplicateEmail:
      return 409;
    case ErrorCode::IoFailure:
    case ErrorCode::CorruptRecord:
      return 500;
    default:
      return 422;
  }
}

// ---- service ----

Service::Service(ApiConfig config) : config_(std::move(config)) {
  config_.validate();
  store_ = store::Store::open(config_.store_dir, config_.clock);

  settings_ = config_.settings;
  if (auto saved = store_->load_settings()) settings_ = settings_from_json(*saved, settings_);

  kbase::KnowledgeBase kb;
  if (auto doc = store_->load_kb()) {
    kb = kbase::kb_from_json(*doc);
  } else {
    kb = kbase::with_media_extension(kbase::seed_default());
    store_->save_kb(kbase::kb_to_json(kb));
    store_->append_log(store::LogLevel::Info, "service", "seeded knowledge base");
  }
  kb_ = std::make_shared<const kbase::KnowledgeBase>(std::move(kb));

  for (const auto& doc : store_->sessions()) {
    try {
      auto slot = std::make_shared<SessionSlot>();
      slot->session = dialogue::session_from_json(doc);
      sessions_[slot->session.session_id] = slot;
    } catch (const std::exception& e) {
      store_->append_log(store::LogLevel::Error, "service", std::string("unreadable session skipped: ") + e.what());
    }
  }

  if (config_.admin && !store_->find_user_by_email(config_.admin->email))
    store_->register_user(config_.admin->email, config_.admin->password, store::Role::Healthcare);

  server_ = std::make_unique<httplib::Server>();
  routes();
}

Service::~Service() {
  stop();
  if (listener_.joinable()) listener_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(jobs_mu_);
    workers.swap(workers_);
  }
  for (auto& t : workers)
    if (t.joinable()) t.join();
}

int Service::start() {
  int port = config_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(config_.host);
  } else if (!server_->bind_to_port(config_.host, port)) {
    port = -1;
  }
  if (port < 0) throw Error(ErrorCode::IoFailure, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  store_->append_log(store::LogLevel::Info, "service", "listening on port " + std::to_string(port));
  return port;
}

void Service::wait() {
  if (listener_.joinable()) listener_.join();
}

void Service::stop() {
  if (server_) server_->stop();
}

std::shared_ptr<const kbase::KnowledgeBase> Service::kb() const {
  std::lock_guard lock(kb_mu_);
  return kb_;
}

Settings Service::settings() const {
  std::lock_guard lock(settings_mu_);
  return settings_;
}

std::shared_ptr<Service::SessionSlot> Service::find_session(const std::string& id, const store::AuthToken& who) {
  std::lock_guard lock(sessions_mu_);
  const auto it = sessions_.find(id);
  // Other users' sessions look the same as missing ones.
  if (it == sessions_.end() || it->second->session.user_id != who.user_id)
    http_fail(404, "not_found", "no session '" + id + "'");
  return it->second;
}

void Service::persist(const dialogue::Session& s) { store_->put_session(dialogue::session_to_json(s)); }

json Service::hybrid_ranking(const dialogue::Session& s, const kbase::KnowledgeBase& kb, double alpha) const {
  std::shared_ptr<const Model> model;
  {
    std::lock_guard lock(model_mu_);
    model = model_;
  }
  if (!model) return nullptr;
  for (const auto& id : model->symptom_ids)
    if (!kb.find_symptom(id)) return nullptr;
  const auto x = learn::encode_observations(kb, model->symptom_ids, s.observations);
  const auto probs = learn::forward(model->mlp, x);
  std::map<std::string, double> rule_scores;
  for (const auto& b : infer::rank(kb, s.observations))
    if (!b.advisory) rule_scores.emplace(b.condition_id, b.score);
  json out = json::array();
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < model->condition_ids.size(); ++i) {
    const auto it = rule_scores.find(model->condition_ids[i]);
    const double rule = it == rule_scores.end() ? 0.0 : it->second;
    order.push_back({infer::blend(rule, probs[i], alpha), i});
  }
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : model->condition_ids[a.second] < model->condition_ids[b.second];
  });
  for (const auto& [blended, i] : order) {
    const auto it = rule_scores.find(model->condition_ids[i]);
    out.push_back({{"condition_id", model->condition_ids[i]},
                   {"rule_score", it == rule_scores.end() ? 0.0 : it->second},
                   {"model_probability", probs[i]},
                   {"blended", blended}});
  }
  return out;
}

json Service::stats() const {
  const auto kb = this->kb();
  std::map<std::string, int> by_condition, by_kind;
  for (const auto& r : store_->all_records(store::RecordKind::DiagnosisResult)) {
    const auto& d = r.payload.contains("decision") ? r.payload.at("decision") : json::object();
    by_kind[d.value("kind", "unknown")]++;
    if (d.contains("top_k") && !d.at("top_k").empty()) by_condition[d.at("top_k").at(0).value("condition_id", "")]++;
  }

  // Cluster the observation vectors of the most recent sessions.
  std::vector<std::string> symptom_ids;
  for (const auto& s : kb->symptoms()) symptom_ids.push_back(s.id);
  std::vector<json> docs = store_->sessions();
  std::vector<std::vector<double>> vectors;
  constexpr std::size_t kRecent = 200;
  for (std::size_t i = docs.size() > kRecent ? docs.size() - kRecent : 0; i < docs.size(); ++i) {
    try {
      vectors.push_back(learn::encode_observations(*kb, symptom_ids, dialogue::session_from_json(docs[i]).observations));
    } catch (const std::exception&) {
      // Sessions that no longer fit the current KB are left out of the summary.
    }
  }
  json clusters = nullptr;
  std::set<std::vector<double>> distinct(vectors.begin(), vectors.end());
  if (!distinct.empty()) {
    const int k = static_cast<int>(std::min<std::size_t>(3, distinct.size()));
    const auto result = learn::kmeans(vectors, k, 100, 0);
    clusters = {{"k", k}, {"sessions", vectors.size()}, {"inertia", result.inertia}, {"clusters", json::array()}};
    for (int c = 0; c < k; ++c) {
      const auto size = std::count(result.assignments.begin(), result.assignments.end(), c);
      std::vector<std::pair<double, std::string>> top;
      for (std::size_t d = 0; d < symptom_ids.size(); ++d)
        if (result.centroids[static_cast<std::size_t>(c)][d] > 0.5)
          top.push_back({result.centroids[static_cast<std::size_t>(c)][d], symptom_ids[d]});
      std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      json symptoms = json::array();
      for (std::size_t t = 0; t < top.size() && t < 5; ++t) symptoms.push_back(top[t].second);
      clusters["clusters"].push_back({{"size", size}, {"top_symptoms", symptoms}});
    }
  }
  return {{"users", store_->user_count()},
          {"diagnosis_counts", by_condition},
          {"decision_counts", by_kind},
          {"cluster_summary", clusters}};
}

void Service::run_job(std::string job_id, json request) {
  std::shared_ptr<Job> job;
  {
    std::lock_guard lock(jobs_mu_);
    job = jobs_.at(job_id);
  }
  auto update = [&](const json& patch) {
    std::lock_guard lock(job->mu);
    job->status.update(patch);
  };
  update({{"status", "running"}});
  try {
    const auto kb = this->kb();
    const auto settings = this->settings();
    const int n = request.value("n_per_condition", 50);
    const double noise = request.value("noise", 0.1);
    const auto seed = request.value("seed", std::uint64_t{0});
    const auto method = request.value("method", std::string("backprop"));
    const auto conditions = request.value("conditions", std::vector<std::string>{});
    const auto data = learn::generate_synthetic_cases(*kb, n, noise, seed, conditions);
    const learn::Layout layout{data.symptom_ids.size(), static_cast<std::size_t>(settings.learn.hidden),
                               data.condition_ids.size()};
    learn::Mlp mlp;
    if (method == "pso") {
      auto params = settings.learn.pso;
      params.seed = seed;
      mlp = learn::train_pso(layout, data, params).mlp;
    } else {
      mlp = learn::train_backprop(layout, data, settings.learn.epochs, settings.learn.learning_rate, seed).mlp;
    }
    const double loss = learn::loss(mlp, data), acc = learn::accuracy(mlp, data);
    {
      std::lock_guard lock(model_mu_);
      model_ = std::make_shared<const Model>(Model{mlp, data.symptom_ids, data.condition_ids, kb->version()});
    }
    store_->append_log(store::LogLevel::Info, "learn",
                       "train job " + job_id + " done: loss " + std::to_string(loss) + ", accuracy " +
                           std::to_string(acc));
    update({{"status", "done"}, {"final_loss", loss}, {"accuracy", acc}, {"rows", data.size()}});
  } catch (const std::exception& e) {
    store_->append_log(store::LogLevel::Error, "learn", "train job " + job_id + " failed: " + e.what());
    update({{"status", "failed"}, {"error", e.what()}});
  }
}

void Service::routes() {
  auto& srv = *server_;
  srv.set_payload_max_length(64 * kMaxMediaBytes);

  // Wraps a handler with error mapping; `auth` resolves the bearer token.
  enum class Access { Public, User, Healthcare };
  auto wrap = [this](Access access, auto handler) {
    return [this, access, handler](const httplib::Request& req, httplib::Response& res) {
      try {
        store::AuthToken who;
        if (access != Access::Public) {
          const auto header = req.get_header_value("Authorization");
          if (header.rfind("Bearer ", 0) != 0) http_fail(401, "unauthorized", "missing bearer token");
          who = store_->verify_token(header.substr(7));
          if (access == Access::Healthcare && who.role != store::Role::Healthcare)
            http_fail(403, "forbidden", "this endpoint needs a Healthcare account");
        }
        handler(req, res, who);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.code, e.message);
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, "bad_request", e.what());
      } catch (const std::exception& e) {
        store_->append_log(store::LogLevel::Error, "service", e.what());
        send_error(res, 500, "internal", e.what());
      }
    };
  };
  using Req = const httplib::Request&;
  using Res = httplib::Response&;
  using Who = const store::AuthToken&;

  srv.Get("/health", wrap(Access::Public, [this](Req, Res res, Who) {
            send_json(res, 200, {{"status", "ok"}, {"kb_version", kb()->version()}});
          }));

  srv.Post("/auth/register", wrap(Access::Public, [this](Req req, Res res, Who) {
             const auto body = parse_body(req);
             const auto role = store::role_from_string(body.value("role", std::string("Standard")));
             if (role == store::Role::Healthcare) {
               // Healthcare accounts are created by existing Healthcare users.
               const auto header = req.get_header_value("Authorization");
               if (header.rfind("Bearer ", 0) != 0)
                 http_fail(403, "forbidden", "Healthcare accounts need a Healthcare token");
               if (store_->verify_token(header.substr(7)).role != store::Role::Healthcare)
                 http_fail(403, "forbidden", "Healthcare accounts need a Healthcare token");
             }
             const auto u = store_->register_user(body.at("email").get<std::string>(),
                                                  body.at("password").get<std::string>(), role);
             send_json(res, 201, store::to_public_json(u));
           }));

  srv.Post("/auth/login", wrap(Access::Public, [this](Req req, Res res, Who) {
             const auto body = parse_body(req);
             const auto t = store_->authenticate(body.value("email", std::string()), body.value("password", std::string()));
             send_json(res, 200,
                       {{"token", t.token},
                        {"role", store::to_string(t.role)},
                        {"user_id", t.user_id},
                        {"expires_at", format_rfc3339(t.expires_at)}});
           }));

  srv.Get("/kb", wrap(Access::User, [this](Req, Res res, Who) { send_json(res, 200, kbase::kb_to_json(*kb())); }));

  srv.Post("/kb/conditions", wrap(Access::Healthcare, [this](Req req, Res res, Who who) {
             const auto body = parse_body(req);
             const auto& rule_doc = body.contains("rule") ? body.at("rule") : body;
             kbase::ConditionRule rule;
             std::vector<kbase::Symptom> symptoms;
             try {
               rule = rule_doc.get<kbase::ConditionRule>();
               if (body.contains("rule") && body.contains("symptoms")) symptoms = body.at("symptoms").get<std::vector<kbase::Symptom>>();
             } catch (const json::exception& e) {
               throw Error(ErrorCode::ParseError, std::string("malformed condition rule: ") + e.what());
             }
             std::lock_guard lock(kb_mu_);  // serializes admin updates; readers copy the pointer
             auto next = kbase::upsert_condition(*kb_, rule, symptoms);
             store_->save_kb(kbase::kb_to_json(next));
             kb_ = std::make_shared<const kbase::KnowledgeBase>(std::move(next));
             store_->append_log(store::LogLevel::Info, "kbase",
                                who.user_id + " saved condition " + rule.condition_id + ", version " +
                                    std::to_string(kb_->version()));
             send_json(res, 200, {{"version", kb_->version()}, {"condition_id", rule.condition_id}});
           }));

  srv.Get("/kb/symptoms/match", wrap(Access::User, [this](Req req, Res res, Who) {
            const auto kb = this->kb();
            const std::string limit = req.has_param("limit") ? req.get_param_value("limit") : "10";
            std::size_t n = 10;
            try {
              n = static_cast<std::size_t>(std::stoul(limit));
            } catch (...) {
              throw Error(ErrorCode::ParseError, "limit must be a non-negative integer");
            }
            json out = json::array();
            for (const auto& m : kbase::match_symptom_text(*kb, req.get_param_value("q"), n))
              out.push_back({{"symptom_id", m.symptom_id},
                             {"name", kb->find_symptom(m.symptom_id)->name},
                             {"similarity", m.similarity}});
            send_json(res, 200, out);
          }));

  srv.Get("/profile", wrap(Access::User, [this](Req, Res res, Who who) {
            send_json(res, 200, store_->profile(who.user_id).value_or(store::Profile{who.user_id, {}, {}, {}}));
          }));

  srv.Put("/profile", wrap(Access::User, [this](Req req, Res res, Who who) {
            auto p = parse_body(req).get<store::Profile>();
            p.user_id = who.user_id;
            const auto kb = this->kb();
            for (const auto& c : p.chronic_conditions)
              if (!kb->find_rule(c)) throw Error(ErrorCode::ValidationFailed, "unknown chronic condition '" + c + "'");
            store_->put_profile(p);
            send_json(res, 200, p);
          }));

  srv.Post("/sessions", wrap(Access::User, [this](Req req, Res res, Who who) {
             const auto body = parse_body(req);
             dialogue::Policy policy = dialogue::Greedy{};
             if (body.contains("policy")) policy = dialogue::policy_from_json(body.at("policy"));
             auto profile = store_->profile(who.user_id).value_or(store::Profile{who.user_id, {}, {}, {}});
             auto slot = std::make_shared<SessionSlot>();
             slot->session = dialogue::start_session(profile, policy);
             slot->session.user_id = who.user_id;
             persist(slot->session);
             {
               std::lock_guard lock(sessions_mu_);
               sessions_[slot->session.session_id] = slot;
             }
             send_json(res, 201, {{"session_id", slot->session.session_id}});
           }));

  srv.Get(R"(/sessions/([0-9a-f]+))", wrap(Access::User, [this](Req req, Res res, Who who) {
            auto slot = find_session(req.matches[1], who);
            std::lock_guard lock(slot->mu);
            send_json(res, 200, dialogue::session_to_json(slot->session));
          }));

  srv.Get(R"(/sessions/([0-9a-f]+)/next-question)", wrap(Access::User, [this](Req req, Res res, Who who) {
            auto slot = find_session(req.matches[1], who);
            const auto kb = this->kb();
            std::lock_guard lock(slot->mu);
            const auto q = dialogue::next_question(slot->session, *kb, settings().thresholds);
            if (!q) {
              res.status = 204;
              return;
            }
            const auto* s = kb->find_symptom(*q);
            json kind = {{"type", "Boolean"}};
            if (s->threshold)
              kind = {{"type", "Threshold"}, {"unit", s->threshold->unit}, {"cutoff", s->threshold->cutoff}};
            send_json(res, 200, {{"symptom_id", *q}, {"name", s->name}, {"kind", kind}});
          }));

  srv.Post(R"(/sessions/([0-9a-f]+)/answers)", wrap(Access::User, [this](Req req, Res res, Who who) {
             auto slot = find_session(req.matches[1], who);
             const auto body = parse_body(req);
             const auto kb = this->kb();
             std::lock_guard lock(slot->mu);
             dialogue::submit_answer(slot->session, *kb, body.at("symptom_id").get<std::string>(),
                                     infer::observation_value_from_json(body.at("value")));
             persist(slot->session);
             auto out = dialogue::session_to_json(slot->session);
             out["current_decision"] = decision_json(dialogue::current_decision(slot->session, *kb, settings().thresholds));
             send_json(res, 200, out);
           }));

  srv.Post(R"(/sessions/([0-9a-f]+)/finalize)", wrap(Access::User, [this](Req req, Res res, Who who) {
             auto slot = find_session(req.matches[1], who);
             const auto kb = this->kb();
             const auto settings = this->settings();
             std::lock_guard lock(slot->mu);
             const auto& decision = dialogue::finalize(slot->session, *kb, settings.thresholds);
             persist(slot->session);
             auto out = decision_json(decision);
             store_->append_record(who.user_id, store::RecordKind::DiagnosisResult,
                                   {{"session_id", slot->session.session_id}, {"decision", out}});
             if (auto hybrid = hybrid_ranking(slot->session, *kb, settings.alpha); !hybrid.is_null())
               out["hybrid"] = hybrid;
             send_json(res, 200, out);
           }));

  srv.Post(R"(/sessions/([0-9a-f]+)/media)", wrap(Access::User, [this](Req req, Res res, Who who) {
             if (req.body.size() > kMaxMediaBytes) http_fail(422, "too_large", "media payload exceeds 2 MiB");
             auto slot = find_session(req.matches[1], who);
             const auto body = parse_body(req);
             const auto kind = body.at("kind").get<std::string>();
             const auto encoding = body.value("encoding", std::string("json"));
             const auto& payload = body.at("payload");
             auto raw = [&] {
               const auto bytes = base64_decode(payload.get<std::string>());
               if (bytes.size() > kMaxMediaBytes) http_fail(422, "too_large", "media payload exceeds 2 MiB");
               return bytes;
             };

             std::string label;
             double confidence = 0.0;
             std::vector<std::string> inject;
             bool refer = false;
             if (kind == "audio") {
               media::Waveform w;
               if (encoding == "pcm16le") w = media::decode_pcm16le(raw());
               else if (encoding == "json") w = media::waveform_from_json(payload);
               else throw Error(ErrorCode::InvalidSpec, "audio encoding must be pcm16le or json");
               const auto c = media::classify_heart_sound(media::extract_audio_features(w));
               label = media::to_string(c.label);
               confidence = c.confidence;
               if (c.label == media::HeartLabel::Abnormal) inject.push_back(kbase::media_symptoms::kAbnormalHeartSound);
             } else if (kind == "image") {
               media::ImageGrid img;
               if (encoding == "pgm") img = media::decode_pgm(raw());
               else if (encoding == "json") img = media::image_from_json(payload);
               else throw Error(ErrorCode::InvalidSpec, "image encoding must be pgm or json");
               const auto c = media::classify_skin_image(media::extract_image_features(img));
               label = media::to_string(c.label);
               confidence = c.confidence;
               refer = c.refer;
               switch (c.label) {
                 case media::SkinClass::Acne: inject.push_back(kbase::media_symptoms::kAcneLesions); break;
                 case media::SkinClass::Sweating: inject.push_back(kbase::media_symptoms::kSweating); break;
                 case media::SkinClass::Measles: inject.push_back(kbase::media_symptoms::kMeaslesRash); break;
                 case media::SkinClass::Healthy: break;
               }
             } else {
               throw Error(ErrorCode::InvalidSpec, "kind must be audio or image");
             }

             const auto kb = this->kb();
             std::lock_guard lock(slot->mu);
             if (!slot->session.active()) throw Error(ErrorCode::SessionFinalized, "session is finalized");
             json injected = json::array();
             for (const auto& id : inject) {
               // A custom KB may lack the media symptoms; the referral flag still applies.
               if (!kb->find_symptom(id)) continue;
               dialogue::inject_observation(slot->session, *kb, id, refer);
               injected.push_back(id);
             }
             if (refer) slot->session.forced_referral = true;
             persist(slot->session);
             send_json(res, 200,
                       {{"label", label}, {"confidence", confidence}, {"refer", refer},
                        {"injected_observations", injected}});
           }));

  srv.Get("/reminders", wrap(Access::User, [this](Req, Res res, Who who) {
            json out = json::array();
            for (const auto& r : store_->reminders(who.user_id)) out.push_back(store::to_json(r));
            send_json(res, 200, out);
          }));

  srv.Post("/reminders", wrap(Access::User, [this](Req req, Res res, Who who) {
             const auto body = parse_body(req);
             store::Reminder r{body.value("reminder_id", std::string()), who.user_id, body.value("title", std::string()),
                               store::schedule_from_json(body.at("schedule")), body.value("active", true)};
             send_json(res, 201, store::to_json(store_->put_reminder(r)));
           }));

  srv.Get("/reminders/due", wrap(Access::User, [this](Req req, Res res, Who who) {
            const Timestamp at = req.has_param("at") ? parse_rfc3339(req.get_param_value("at")) : store_->now();
            json out = json::array();
            for (const auto& r : store_->due_reminders(who.user_id, at)) out.push_back(store::to_json(r));
            send_json(res, 200, out);
          }));

  srv.Get("/records", wrap(Access::User, [this](Req req, Res res, Who who) {
            std::optional<store::RecordKind> kind;
            if (req.has_param("kind")) kind = store::record_kind_from_string(req.get_param_value("kind"));
            json out = json::array();
            for (const auto& r : store_->list_records(who.user_id, kind)) out.push_back(store::to_json(r));
            send_json(res, 200, out);
          }));

  srv.Post("/records", wrap(Access::User, [this](Req req, Res res, Who who) {
             const auto body = parse_body(req);
             const auto kind = store::record_kind_from_string(body.at("kind").get<std::string>());
             send_json(res, 201,
                       store::to_json(store_->append_record(who.user_id, kind, body.value("payload", json::object()))));
           }));

  srv.Get("/stats/users", wrap(Access::Healthcare, [this](Req, Res res, Who) { send_json(res, 200, stats()); }));

  srv.Get("/admin/settings", wrap(Access::Healthcare, [this](Req, Res res, Who) {
            send_json(res, 200, settings_to_json(settings()));
          }));

  srv.Put("/admin/settings", wrap(Access::Healthcare, [this](Req req, Res res, Who who) {
            const auto body = parse_body(req);
            std::lock_guard lock(settings_mu_);
            auto next = settings_from_json(body, settings_);
            next.validate();
            store_->save_settings(settings_to_json(next));
            settings_ = next;
            store_->append_log(store::LogLevel::Info, "service", who.user_id + " updated settings");
            send_json(res, 200, settings_to_json(next));
          }));

  srv.Post("/admin/train", wrap(Access::Healthcare, [this](Req req, Res res, Who) {
             auto body = parse_body(req);
             const auto method = body.value("method", std::string("backprop"));
             if (method != "backprop" && method != "pso")
               throw Error(ErrorCode::InvalidParams, "method must be backprop or pso");
             if (body.value("n_per_condition", 50) < 1) throw Error(ErrorCode::InvalidParams, "n_per_condition >= 1");
             const double noise = body.value("noise", 0.1);
             if (!(noise >= 0.0 && noise <= 1.0)) throw Error(ErrorCode::InvalidParams, "noise must lie in [0, 1]");
             std::string id;
             {
               std::lock_guard lock(jobs_mu_);
               char buf[32];
               std::snprintf(buf, sizeof buf, "job-%06llu", static_cast<unsigned long long>(++job_seq_));
               id = buf;
               auto job = std::make_shared<Job>();
               job->status = {{"job_id", id}, {"status", "queued"}, {"method", method}};
               jobs_[id] = job;
               workers_.emplace_back([this, id, body] { run_job(id, body); });
             }
             send_json(res, 202, {{"job_id", id}});
           }));

  srv.Get(R"(/admin/train/([\w-]+))", wrap(Access::Healthcare, [this](Req req, Res res, Who) {
            std::shared_ptr<Job> job;
            {
              std::lock_guard lock(jobs_mu_);
              const auto it = jobs_.find(req.matches[1]);
              if (it == jobs_.end()) http_fail(404, "not_found", "no such job");
              job = it->second;
            }
            std::lock_guard lock(job->mu);
            send_json(res, 200, job->status);
          }));

  srv.Get("/admin/log", wrap(Access::Healthcare, [this](Req req, Res res, Who) {
            const std::size_t n = req.has_param("n") ? std::stoul(req.get_param_value("n")) : 50;
            json out = json::array();
            for (const auto& e : store_->tail_log(n)) out.push_back(store::to_json(e));
            send_json(res, 200, out);
          }));

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      const std::string code = res.status == 404 ? "not_found" : res.status == 413 ? "too_large" : "bad_request";
      send_error(res, res.status == 413 ? 422 : res.status, code, "no such endpoint or malformed request");
    }
  });
}

}  // namespace triage::service
