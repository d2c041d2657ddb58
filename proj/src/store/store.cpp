#include "triage/store/store.hpp"

#include <fcntl.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "triage/common/error.hpp"

namespace triage::store {

namespace fs = std::filesystem;

namespace {

constexpr const char* kUsers = "users.jsonl";
constexpr const char* kProfiles = "profiles.jsonl";
constexpr const char* kRecords = "records.jsonl";
constexpr const char* kReminders = "reminders.jsonl";
constexpr const char* kLog = "log.jsonl";
constexpr const char* kSessions = "sessions.jsonl";
constexpr const char* kKb = "kb.json";
constexpr const char* kSettings = "settings.json";

std::string to_hex(const unsigned char* p, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(digits[p[i] >> 4]);
    out.push_back(digits[p[i] & 15]);
  }
  return out;
}

std::vector<unsigned char> from_hex(const std::string& s) {
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(ErrorCode::ParseError, "bad hex string");
  };
  if (s.size() % 2) throw Error(ErrorCode::ParseError, "bad hex string");
  std::vector<unsigned char> out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<unsigned char>(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
  return out;
}

std::string random_hex(std::size_t bytes) {
  std::vector<unsigned char> buf(bytes);
  if (RAND_bytes(buf.data(), static_cast<int>(bytes)) != 1) throw Error(ErrorCode::IoFailure, "RAND_bytes failed");
  return to_hex(buf.data(), bytes);
}

std::string fold(const std::string& s) {
  std::string out = s;
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void write_all(int fd, const std::string& data, const fs::path& path) {
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
    off += static_cast<std::size_t>(n);
  }
}

// Durable whole-file replacement: write a sibling, fsync, rename.
void replace_file(const fs::path& path, const std::string& data) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
  try {
    write_all(fd, data, tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::fsync(fd);
  ::close(fd);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot replace " + path.string() + ": " + ec.message());
}

std::optional<nlohmann::json> read_document(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  if (ss.str().empty()) return std::nullopt;
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, path.string() + ": " + e.what());
  }
}

// Numeric suffix of ids like "rec-000042"; 0 when absent.
std::uint64_t id_number(const std::string& id) {
  const auto dash = id.rfind('-');
  if (dash == std::string::npos) return 0;
  try {
    return std::stoull(id.substr(dash + 1));
  } catch (...) {
    return 0;
  }
}

Timestamp floor_mod(Timestamp a, Timestamp m) {
  const Timestamp r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

const char* to_string(Role r) { return r == Role::Healthcare ? "Healthcare" : "Standard"; }

Role role_from_string(const std::string& s) {
  if (s == "Healthcare") return Role::Healthcare;
  if (s == "Standard") return Role::Standard;
  throw Error(ErrorCode::ParseError, "unknown role '" + s + "'");
}

const char* to_string(RecordKind k) {
  switch (k) {
    case RecordKind::DiagnosisResult: return "DiagnosisResult";
    case RecordKind::Appointment: return "Appointment";
    case RecordKind::Measurement: return "Measurement";
    case RecordKind::Note: return "Note";
  }
  return "Note";
}

RecordKind record_kind_from_string(const std::string& s) {
  for (auto k : {RecordKind::DiagnosisResult, RecordKind::Appointment, RecordKind::Measurement, RecordKind::Note})
    if (s == to_string(k)) return k;
  throw Error(ErrorCode::ParseError, "unknown record kind '" + s + "'");
}

PasswordRecord hash_password(const std::string& password, const std::string& salt_hex, int iterations) {
  const auto salt = from_hex(salt_hex);
  unsigned char out[32];
  if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(), static_cast<int>(salt.size()),
                        iterations, EVP_sha256(), sizeof out, out) != 1)
    throw Error(ErrorCode::IoFailure, "PBKDF2 failed");
  return {iterations, salt_hex, to_hex(out, sizeof out)};
}

bool verify_password(const PasswordRecord& rec, const std::string& password) {
  const auto fresh = hash_password(password, rec.salt, rec.iterations);
  return fresh.digest.size() == rec.digest.size() &&
         CRYPTO_memcmp(fresh.digest.data(), rec.digest.data(), rec.digest.size()) == 0;
}

bool valid_email(const std::string& email) {
  const auto at = email.find('@');
  if (at == std::string::npos || at == 0 || email.find('@', at + 1) != std::string::npos) return false;
  const std::string domain = email.substr(at + 1);
  const auto dot = domain.find('.');
  if (dot == std::string::npos || dot == 0 || domain.back() == '.') return false;
  return std::none_of(email.begin(), email.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

void validate_schedule(const Schedule& s) {
  if (const auto* e = std::get_if<EveryNHours>(&s)) {
    if (e->n < 1) throw Error(ErrorCode::InvalidParams, "EveryNHours needs n >= 1");
  } else {
    const auto& d = std::get<DailyAt>(s);
    if (d.hour < 0 || d.hour > 23 || d.minute < 0 || d.minute > 59)
      throw Error(ErrorCode::InvalidParams, "DailyAt needs a valid hh:mm");
  }
}

bool is_due(const Reminder& r, Timestamp at) {
  if (!r.active) return false;
  if (const auto* e = std::get_if<EveryNHours>(&r.schedule)) {
    if (at < e->anchor || e->n < 1) return false;
    return (at - e->anchor) % (static_cast<Timestamp>(e->n) * 3600) < kReminderWindow;
  }
  const auto& d = std::get<DailyAt>(r.schedule);
  const Timestamp diff = std::abs(floor_mod(at, 86400) - (d.hour * 3600 + d.minute * 60));
  return std::min(diff, 86400 - diff) < kReminderWindow;
}

std::vector<Reminder> due_reminders(std::vector<Reminder> reminders, Timestamp at) {
  std::erase_if(reminders, [at](const Reminder& r) { return !is_due(r, at); });
  std::sort(reminders.begin(), reminders.end(),
            [](const Reminder& a, const Reminder& b) { return a.reminder_id < b.reminder_id; });
  return reminders;
}

// ---- JSON ----

nlohmann::json to_json(const UserAccount& u) {
  auto j = to_public_json(u);
  j["password"] = {{"iterations", u.password.iterations}, {"salt", u.password.salt}, {"digest", u.password.digest}};
  return j;
}

nlohmann::json to_public_json(const UserAccount& u) {
  return {{"user_id", u.user_id}, {"email", u.email}, {"role", to_string(u.role)},
          {"created_at", format_rfc3339(u.created_at)}};
}

UserAccount user_from_json(const nlohmann::json& j) {
  UserAccount u;
  u.user_id = j.at("user_id").get<std::string>();
  u.email = j.at("email").get<std::string>();
  u.role = role_from_string(j.at("role").get<std::string>());
  u.created_at = parse_rfc3339(j.at("created_at").get<std::string>());
  const auto& p = j.at("password");
  u.password = {p.at("iterations").get<int>(), p.at("salt").get<std::string>(), p.at("digest").get<std::string>()};
  return u;
}

nlohmann::json to_json(const HealthRecord& r) {
  return {{"record_id", r.record_id}, {"user_id", r.user_id}, {"kind", to_string(r.kind)},
          {"payload", r.payload},     {"at", format_rfc3339(r.at)}};
}

HealthRecord record_from_json(const nlohmann::json& j) {
  return {j.at("record_id").get<std::string>(), j.at("user_id").get<std::string>(),
          record_kind_from_string(j.at("kind").get<std::string>()), j.value("payload", nlohmann::json::object()),
          parse_rfc3339(j.at("at").get<std::string>())};
}

nlohmann::json schedule_to_json(const Schedule& s) {
  if (const auto* e = std::get_if<EveryNHours>(&s))
    return {{"type", "EveryNHours"}, {"n", e->n}, {"anchor", format_rfc3339(e->anchor)}};
  const auto& d = std::get<DailyAt>(s);
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", d.hour, d.minute);
  return {{"type", "DailyAt"}, {"time", buf}};
}

Schedule schedule_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    Schedule s;
    if (type == "EveryNHours") {
      s = EveryNHours{j.at("n").get<int>(), parse_rfc3339(j.at("anchor").get<std::string>())};
    } else if (type == "DailyAt") {
      const auto t = j.at("time").get<std::string>();
      int h = -1, m = -1, used = 0;
      if (std::sscanf(t.c_str(), "%2d:%2d%n", &h, &m, &used) != 2 || used != 5 || t.size() != 5)
        throw Error(ErrorCode::ParseError, "DailyAt time must be hh:mm");
      s = DailyAt{h, m};
    } else {
      throw Error(ErrorCode::ParseError, "unknown schedule type '" + type + "'");
    }
    validate_schedule(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed schedule: ") + e.what());
  }
}

nlohmann::json to_json(const Reminder& r) {
  return {{"reminder_id", r.reminder_id},
          {"user_id", r.user_id},
          {"title", r.title},
          {"schedule", schedule_to_json(r.schedule)},
          {"active", r.active}};
}

Reminder reminder_from_json(const nlohmann::json& j) {
  return {j.at("reminder_id").get<std::string>(), j.at("user_id").get<std::string>(), j.value("title", ""),
          schedule_from_json(j.at("schedule")), j.value("active", true)};
}

nlohmann::json to_json(const LogEntry& e) {
  return {{"at", format_rfc3339(e.at)},
          {"level", e.level == LogLevel::Error ? "Error" : "Info"},
          {"source", e.source},
          {"message", e.message}};
}

LogEntry log_from_json(const nlohmann::json& j) {
  const auto level = j.at("level").get<std::string>();
  if (level != "Error" && level != "Info") throw Error(ErrorCode::ParseError, "bad log level");
  return {parse_rfc3339(j.at("at").get<std::string>()), level == "Error" ? LogLevel::Error : LogLevel::Info,
          j.at("source").get<std::string>(), j.at("message").get<std::string>()};
}

// ---- Store ----

Store::Store(fs::path dir, Clock clock) : dir_(std::move(dir)), clock_(std::move(clock)) {}

std::unique_ptr<Store> Store::open(const fs::path& dir, Clock clock) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  for (const char* f : {kUsers, kProfiles, kRecords, kReminders, kLog, kSessions}) {
    const auto p = dir / f;
    if (fs::exists(p)) continue;
    std::ofstream touch(p, std::ios::app);
    if (!touch) throw Error(ErrorCode::IoFailure, "cannot create " + p.string());
  }
  std::unique_ptr<Store> s(new Store(dir, clock ? std::move(clock) : Clock(system_now)));
  s->load();
  return s;
}

void Store::load() {
  std::vector<std::string> corrupt;
  auto each_line = [&](const char* file, auto&& handle) {
    std::ifstream in(dir_ / file);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + (dir_ / file).string());
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
      if (line.empty()) continue;
      try {
        handle(nlohmann::json::parse(line));
      } catch (const std::exception& e) {
        corrupt.push_back(std::string(file) + " line " + std::to_string(no) + ": " + e.what());
      }
    }
  };
  each_line(kUsers, [&](const nlohmann::json& j) {
    auto u = user_from_json(j);
    user_seq_ = std::max(user_seq_, id_number(u.user_id));
    email_index_[u.email] = u.user_id;
    users_[u.user_id] = std::move(u);
  });
  each_line(kProfiles, [&](const nlohmann::json& j) {
    auto p = j.get<Profile>();
    if (p.user_id.empty()) throw Error(ErrorCode::ParseError, "profile without user_id");
    profiles_[p.user_id] = std::move(p);
  });
  each_line(kRecords, [&](const nlohmann::json& j) {
    auto r = record_from_json(j);
    record_seq_ = std::max(record_seq_, id_number(r.record_id));
    records_[r.record_id] = std::move(r);
  });
  each_line(kReminders, [&](const nlohmann::json& j) {
    auto r = reminder_from_json(j);
    reminder_seq_ = std::max(reminder_seq_, id_number(r.reminder_id));
    reminders_[r.reminder_id] = std::move(r);
  });
  each_line(kLog, [&](const nlohmann::json& j) { log_.push_back(log_from_json(j)); });
  each_line(kSessions, [&](const nlohmann::json& j) {
    sessions_[j.at("session_id").get<std::string>()] = j;
  });
  for (const auto& msg : corrupt) log_locked(LogLevel::Error, "store", "corrupt record skipped: " + msg);
}

void Store::append_line(const char* file, const nlohmann::json& doc) {
  const auto path = dir_ / file;
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  try {
    write_all(fd, doc.dump() + "\n", path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::fdatasync(fd);
  ::close(fd);
}

void Store::log_locked(LogLevel level, const std::string& source, const std::string& message) {
  LogEntry e{clock_(), level, source, message};
  append_line(kLog, to_json(e));
  log_.push_back(std::move(e));
}

std::string Store::next_id(const char* prefix, std::uint64_t& counter) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s-%06llu", prefix, static_cast<unsigned long long>(++counter));
  return buf;
}

UserAccount Store::register_user(const std::string& email, const std::string& password, Role role) {
  const auto folded = fold(email);
  if (!valid_email(folded)) throw Error(ErrorCode::InvalidEmail, "email address is not valid");
  if (password.size() < kMinPasswordLength)
    throw Error(ErrorCode::WeakPassword, "password must have at least 8 characters");
  {
    std::lock_guard lock(mu_);
    if (email_index_.count(folded)) throw Error(ErrorCode::DuplicateEmail, "email already registered");
  }
  // Hash outside the lock; recheck the email afterwards.
  auto rec = hash_password(password, random_hex(16));
  std::lock_guard lock(mu_);
  if (email_index_.count(folded)) throw Error(ErrorCode::DuplicateEmail, "email already registered");
  UserAccount u{next_id("user", user_seq_), folded, std::move(rec), role, clock_()};
  append_line(kUsers, to_json(u));
  email_index_[u.email] = u.user_id;
  users_[u.user_id] = u;
  log_locked(LogLevel::Info, "store", "registered " + u.user_id + " as " + to_string(role));
  return u;
}

AuthToken Store::authenticate(const std::string& email, const std::string& password) {
  std::optional<UserAccount> user = find_user_by_email(email);
  // Unknown emails still pay for one digest so both failures look alike.
  static const PasswordRecord dummy = hash_password("", "00000000000000000000000000000000");
  const bool ok = verify_password(user ? user->password : dummy, password) && user;
  if (!ok) throw Error(ErrorCode::InvalidCredentials, "invalid email or password");
  std::lock_guard lock(mu_);
  AuthToken t{random_hex(16), user->user_id, user->role, clock_() + kTokenLifetime};
  tokens_[t.token] = t;
  return t;
}

AuthToken Store::verify_token(const std::string& token) const {
  std::lock_guard lock(mu_);
  const auto it = tokens_.find(token);
  if (it == tokens_.end()) throw Error(ErrorCode::InvalidCredentials, "unknown token");
  if (clock_() >= it->second.expires_at) throw Error(ErrorCode::Expired, "token expired");
  return it->second;
}

std::size_t Store::user_count() const {
  std::lock_guard lock(mu_);
  return users_.size();
}

std::optional<UserAccount> Store::find_user(const std::string& user_id) const {
  std::lock_guard lock(mu_);
  const auto it = users_.find(user_id);
  if (it == users_.end()) return std::nullopt;
  return it->second;
}

std::optional<UserAccount> Store::find_user_by_email(const std::string& email) const {
  std::lock_guard lock(mu_);
  const auto it = email_index_.find(fold(email));
  if (it == email_index_.end()) return std::nullopt;
  return users_.at(it->second);
}

std::vector<UserAccount> Store::users() const {
  std::lock_guard lock(mu_);
  std::vector<UserAccount> out;
  for (const auto& [id, u] : users_) out.push_back(u);
  return out;
}

void Store::put_profile(const Profile& p) {
  std::lock_guard lock(mu_);
  if (!users_.count(p.user_id)) throw Error(ErrorCode::UnknownUser, "unknown user '" + p.user_id + "'");
  append_line(kProfiles, nlohmann::json(p));
  profiles_[p.user_id] = p;
}

std::optional<Profile> Store::profile(const std::string& user_id) const {
  std::lock_guard lock(mu_);
  const auto it = profiles_.find(user_id);
  if (it == profiles_.end()) return std::nullopt;
  return it->second;
}

HealthRecord Store::append_record(const std::string& user_id, RecordKind kind, const nlohmann::json& payload) {
  std::lock_guard lock(mu_);
  if (!users_.count(user_id)) throw Error(ErrorCode::UnknownUser, "unknown user '" + user_id + "'");
  Timestamp at = clock_();
  for (const auto& [id, r] : records_)
    if (r.user_id == user_id) at = std::max(at, r.at);
  HealthRecord r{next_id("rec", record_seq_), user_id, kind, payload, at};
  append_line(kRecords, to_json(r));
  records_[r.record_id] = r;
  return r;
}

namespace {

void sort_records(std::vector<HealthRecord>& v) {
  std::sort(v.begin(), v.end(), [](const HealthRecord& a, const HealthRecord& b) {
    return a.at != b.at ? a.at < b.at : a.record_id < b.record_id;
  });
}

}  // namespace

std::vector<HealthRecord> Store::list_records(const std::string& user_id, std::optional<RecordKind> kind) const {
  std::lock_guard lock(mu_);
  if (!users_.count(user_id)) throw Error(ErrorCode::UnknownUser, "unknown user '" + user_id + "'");
  std::vector<HealthRecord> out;
  for (const auto& [id, r] : records_)
    if (r.user_id == user_id && (!kind || r.kind == *kind)) out.push_back(r);
  sort_records(out);
  return out;
}

std::vector<HealthRecord> Store::all_records(std::optional<RecordKind> kind) const {
  std::lock_guard lock(mu_);
  std::vector<HealthRecord> out;
  for (const auto& [id, r] : records_)
    if (!kind || r.kind == *kind) out.push_back(r);
  sort_records(out);
  return out;
}

Reminder Store::put_reminder(Reminder r) {
  validate_schedule(r.schedule);
  std::lock_guard lock(mu_);
  if (!users_.count(r.user_id)) throw Error(ErrorCode::UnknownUser, "unknown user '" + r.user_id + "'");
  if (r.reminder_id.empty()) {
    r.reminder_id = next_id("rem", reminder_seq_);
  } else {
    const auto it = reminders_.find(r.reminder_id);
    if (it != reminders_.end() && it->second.user_id != r.user_id)
      throw Error(ErrorCode::NotFound, "unknown reminder '" + r.reminder_id + "'");
    reminder_seq_ = std::max(reminder_seq_, id_number(r.reminder_id));
  }
  append_line(kReminders, to_json(r));
  reminders_[r.reminder_id] = r;
  return r;
}

std::vector<Reminder> Store::reminders(const std::string& user_id) const {
  std::lock_guard lock(mu_);
  std::vector<Reminder> out;
  for (const auto& [id, r] : reminders_)
    if (r.user_id == user_id) out.push_back(r);
  return out;
}

std::vector<Reminder> Store::due_reminders(const std::string& user_id, Timestamp at) const {
  return store::due_reminders(reminders(user_id), at);
}

void Store::append_log(LogLevel level, const std::string& source, const std::string& message) {
  std::lock_guard lock(mu_);
  log_locked(level, source, message);
}

std::vector<LogEntry> Store::tail_log(std::size_t n) const {
  std::lock_guard lock(mu_);
  const std::size_t k = std::min(n, log_.size());
  return {log_.end() - static_cast<std::ptrdiff_t>(k), log_.end()};
}

void Store::save_kb(const nlohmann::json& kb) {
  std::lock_guard lock(mu_);
  replace_file(dir_ / kKb, kb.dump(2) + "\n");
}

std::optional<nlohmann::json> Store::load_kb() const {
  std::lock_guard lock(mu_);
  return read_document(dir_ / kKb);
}

void Store::save_settings(const nlohmann::json& settings) {
  std::lock_guard lock(mu_);
  replace_file(dir_ / kSettings, settings.dump(2) + "\n");
}

std::optional<nlohmann::json> Store::load_settings() const {
  std::lock_guard lock(mu_);
  return read_document(dir_ / kSettings);
}

void Store::put_session(const nlohmann::json& session) {
  const auto id = session.at("session_id").get<std::string>();
  std::lock_guard lock(mu_);
  append_line(kSessions, session);
  sessions_[id] = session;
}

std::optional<nlohmann::json> Store::session(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return std::optional<nlohmann::json>(it->second);
}

std::vector<nlohmann::json> Store::sessions() const {
  std::lock_guard lock(mu_);
  std::vector<nlohmann::json> out;
  for (const auto& [id, s] : sessions_) out.push_back(s);
  return out;
}

}  // namespace triage::store
