#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "triage/common/time.hpp"
#include "triage/store/profile.hpp"

namespace triage::store {

enum class Role { Healthcare, Standard };
const char* to_string(Role r);
Role role_from_string(const std::string& s);  // throws Error(ParseError)

inline constexpr int kPasswordIterations = 100000;
inline constexpr std::size_t kMinPasswordLength = 8;
inline constexpr Timestamp kTokenLifetime = 24 * 3600;
inline constexpr Timestamp kReminderWindow = 60;

struct PasswordRecord {
  int iterations = kPasswordIterations;
  std::string salt;    // 16 bytes, hex
  std::string digest;  // PBKDF2-HMAC-SHA256, 32 bytes, hex
};

// Deterministic given the salt.
PasswordRecord hash_password(const std::string& password, const std::string& salt_hex,
                             int iterations = kPasswordIterations);
bool verify_password(const PasswordRecord& rec, const std::string& password);

struct UserAccount {
  std::string user_id;
  std::string email;  // case-folded
  PasswordRecord password;
  Role role = Role::Standard;
  Timestamp created_at = 0;
};

struct AuthToken {
  std::string token;  // 32 hex chars
  std::string user_id;
  Role role = Role::Standard;
  Timestamp expires_at = 0;
};

enum class RecordKind { DiagnosisResult, Appointment, Measurement, Note };
const char* to_string(RecordKind k);
RecordKind record_kind_from_string(const std::string& s);  // throws Error(ParseError)

struct HealthRecord {
  std::string record_id;
  std::string user_id;
  RecordKind kind = RecordKind::Note;
  nlohmann::json payload;
  Timestamp at = 0;
};

struct EveryNHours {
  int n = 1;
  Timestamp anchor = 0;
};
struct DailyAt {
  int hour = 0;
  int minute = 0;
};
using Schedule = std::variant<EveryNHours, DailyAt>;

struct Reminder {
  std::string reminder_id;
  std::string user_id;
  std::string title;
  Schedule schedule;
  bool active = true;
};

// Throws Error(InvalidParams) for a malformed schedule.
void validate_schedule(const Schedule& s);
bool is_due(const Reminder& r, Timestamp at);
// Due subset sorted by reminder_id.
std::vector<Reminder> due_reminders(std::vector<Reminder> reminders, Timestamp at);

enum class LogLevel { Error, Info };
struct LogEntry {
  Timestamp at = 0;
  LogLevel level = LogLevel::Info;
  std::string source;
  std::string message;
};

nlohmann::json to_json(const UserAccount& u);  // includes the password record
nlohmann::json to_public_json(const UserAccount& u);
nlohmann::json to_json(const HealthRecord& r);
nlohmann::json to_json(const Reminder& r);
nlohmann::json to_json(const LogEntry& e);
nlohmann::json schedule_to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j);  // throws Error(ParseError / InvalidParams)
UserAccount user_from_json(const nlohmann::json& j);
HealthRecord record_from_json(const nlohmann::json& j);
Reminder reminder_from_json(const nlohmann::json& j);
LogEntry log_from_json(const nlohmann::json& j);

// JSON-lines store rooted at one directory. One instance is the single writer;
// every method is safe to call from multiple threads.
class Store {
 public:
  // Creates the collection files if absent and loads them, last write per id
  // winning. Corrupt lines are skipped and reported in the log.
  // Throws Error(IoFailure).
  static std::unique_ptr<Store> open(const std::filesystem::path& dir, Clock clock = system_now);

  const std::filesystem::path& directory() const { return dir_; }
  Timestamp now() const { return clock_(); }

  // Throws DuplicateEmail, WeakPassword, InvalidEmail.
  UserAccount register_user(const std::string& email, const std::string& password, Role role);
  // Throws InvalidCredentials, with the same message for unknown email and wrong password.
  AuthToken authenticate(const std::string& email, const std::string& password);
  // Throws InvalidCredentials for unknown tokens and Expired past expires_at.
  AuthToken verify_token(const std::string& token) const;

  std::size_t user_count() const;
  std::optional<UserAccount> find_user(const std::string& user_id) const;
  std::optional<UserAccount> find_user_by_email(const std::string& email) const;
  std::vector<UserAccount> users() const;

  // Throws UnknownUser.
  void put_profile(const Profile& p);
  std::optional<Profile> profile(const std::string& user_id) const;

  // The store stamps `at` from its clock, never earlier than the user's last record.
  // Throws UnknownUser.
  HealthRecord append_record(const std::string& user_id, RecordKind kind, const nlohmann::json& payload);
  // Sorted by timestamp, then record_id.
  std::vector<HealthRecord> list_records(const std::string& user_id, std::optional<RecordKind> kind = {}) const;
  std::vector<HealthRecord> all_records(std::optional<RecordKind> kind = {}) const;

  // Assigns an id when reminder_id is empty; replaces otherwise.
  // Throws UnknownUser, InvalidParams.
  Reminder put_reminder(Reminder r);
  std::vector<Reminder> reminders(const std::string& user_id) const;
  std::vector<Reminder> due_reminders(const std::string& user_id, Timestamp at) const;

  void append_log(LogLevel level, const std::string& source, const std::string& message);
  std::vector<LogEntry> tail_log(std::size_t n) const;

  // Whole-document files, replaced atomically.
  void save_kb(const nlohmann::json& kb);
  std::optional<nlohmann::json> load_kb() const;
  void save_settings(const nlohmann::json& settings);
  std::optional<nlohmann::json> load_settings() const;

  // Dialogue sessions as opaque documents keyed by "session_id".
  void put_session(const nlohmann::json& session);
  std::optional<nlohmann::json> session(const std::string& session_id) const;
  std::vector<nlohmann::json> sessions() const;

 private:
  Store(std::filesystem::path dir, Clock clock);
  void load();
  void append_line(const char* file, const nlohmann::json& doc);
  void log_locked(LogLevel level, const std::string& source, const std::string& message);
  std::string next_id(const char* prefix, std::uint64_t& counter);

  std::filesystem::path dir_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<std::string, UserAccount> users_;
  std::map<std::string, std::string> email_index_;
  std::map<std::string, Profile> profiles_;
  std::map<std::string, HealthRecord> records_;
  std::map<std::string, Reminder> reminders_;
  std::vector<LogEntry> log_;
  std::map<std::string, nlohmann::json> sessions_;
  std::map<std::string, AuthToken> tokens_;
  std::uint64_t user_seq_ = 0, record_seq_ = 0, reminder_seq_ = 0;
};

// Syntactic check only: one '@', non-empty local part, dotted domain.
bool valid_email(const std::string& email);

}  // namespace triage::store
