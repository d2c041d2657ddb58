#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "triage/common/error.hpp"
#include "triage/store/store.hpp"

using namespace triage;
using namespace triage::store;
namespace fs = std::filesystem;

namespace {

// 2024-05-01T00:00:00Z.
constexpr Timestamp kMay1 = 1714521600;

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> n{0};
    path = fs::temp_directory_path() / ("triage_store_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> ids(const std::vector<Reminder>& v) {
  std::vector<std::string> out;
  for (const auto& r : v) out.push_back(r.reminder_id);
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::ParseError;
}

}  // namespace

TEST(Time, Rfc3339) {
  EXPECT_EQ(parse_rfc3339("2024-05-01T00:00:00Z"), kMay1);
  EXPECT_EQ(format_rfc3339(kMay1 + 9 * 3600 + 30), "2024-05-01T09:00:30Z");
  EXPECT_EQ(parse_rfc3339("2024-05-01T02:00:00+02:00"), kMay1);
  EXPECT_EQ(parse_rfc3339("2024-05-01T00:00:00.75Z"), kMay1);
  EXPECT_EQ(format_rfc3339(0), "1970-01-01T00:00:00Z");
  for (Timestamp t : {Timestamp{0}, kMay1, Timestamp{951782400}, Timestamp{4102444799}})
    EXPECT_EQ(parse_rfc3339(format_rfc3339(t)), t);
  for (const char* bad : {"2024-05-01", "2024-13-01T00:00:00Z", "2024-02-30T00:00:00Z", "2024-05-01T00:00:00",
                          "2024-05-01T00:00:00Zx"})
    EXPECT_THROW(parse_rfc3339(bad), Error) << bad;
}

TEST(Reminders, FixedScenarioTable) {
  const std::vector<Reminder> rs = {
      {"rem-1", "u", "pill", EveryNHours{8, kMay1 + 6 * 3600}, true},
      {"rem-2", "u", "morning", DailyAt{9, 0}, true},
      {"rem-3", "u", "off", DailyAt{9, 0}, false},
      {"rem-4", "u", "midnight", DailyAt{0, 0}, true},
      {"rem-5", "u", "off cycle", EveryNHours{8, kMay1 + 6 * 3600}, false},
  };
  struct Case {
    const char* at;
    std::vector<std::string> due;
  };
  // Cycle due times: 06:00, 14:00, 22:00 daily from May 1 06:00.
  const std::vector<Case> table = {
      {"2024-05-01T06:00:00Z", {"rem-1"}},
      {"2024-05-01T22:00:00Z", {"rem-1"}},          // anchor + 16 h
      {"2024-05-01T22:00:59Z", {"rem-1"}},
      {"2024-05-01T22:01:00Z", {}},
      {"2024-04-30T22:00:00Z", {}},                 // before the anchor
      {"2024-05-01T10:00:00Z", {}},
      {"2024-05-01T09:00:00Z", {"rem-2"}},
      {"2024-05-01T09:00:30Z", {"rem-2"}},
      {"2024-05-01T09:02:00Z", {}},
      {"2024-05-01T08:59:01Z", {"rem-2"}},
      {"2024-05-01T08:59:00Z", {}},
      {"2024-05-02T09:00:30Z", {"rem-2"}},
      {"2024-05-01T23:59:30Z", {"rem-4"}},          // wraps around midnight
      {"2024-05-02T00:00:59Z", {"rem-4"}},
      {"2024-05-02T06:00:10Z", {"rem-1"}},
      {"2024-05-03T14:00:00Z", {"rem-1"}},
  };
  for (const auto& c : table) EXPECT_EQ(ids(due_reminders(rs, parse_rfc3339(c.at))), c.due) << c.at;
}

TEST(Reminders, InactiveNeverDueAndSorted) {
  std::vector<Reminder> rs;
  for (int i = 9; i >= 0; --i)
    rs.push_back({"rem-" + std::to_string(i), "u", "", EveryNHours{1, 0}, i % 3 != 0});
  for (Timestamp at = 0; at < 3 * 3600; at += 20) {
    const auto due = due_reminders(rs, at);
    EXPECT_TRUE(std::is_sorted(due.begin(), due.end(),
                               [](const Reminder& a, const Reminder& b) { return a.reminder_id < b.reminder_id; }));
    for (const auto& r : due) EXPECT_TRUE(r.active);
    EXPECT_EQ(due.size(), at % 3600 < 60 ? 6u : 0u) << at;
  }
}

TEST(Reminders, ScheduleValidationAndJson) {
  EXPECT_THROW(validate_schedule(EveryNHours{0, 0}), Error);
  EXPECT_THROW(validate_schedule(DailyAt{24, 0}), Error);
  const Schedule s = DailyAt{9, 5};
  EXPECT_EQ(schedule_to_json(s)["time"], "09:05");
  EXPECT_EQ(std::get<DailyAt>(schedule_from_json(schedule_to_json(s))).minute, 5);
  const Schedule e = EveryNHours{8, kMay1};
  EXPECT_EQ(std::get<EveryNHours>(schedule_from_json(schedule_to_json(e))).anchor, kMay1);
  EXPECT_THROW(schedule_from_json({{"type", "DailyAt"}, {"time", "9:5"}}), Error);
  EXPECT_THROW(schedule_from_json({{"type", "Weekly"}}), Error);
}

TEST(Passwords, SaltedPbkdf2) {
  const auto a = hash_password("longenough", "00112233445566778899aabbccddeeff");
  EXPECT_EQ(a.iterations, 100000);
  EXPECT_EQ(a.digest.size(), 64u);
  EXPECT_EQ(a.digest, hash_password("longenough", a.salt).digest);
  EXPECT_TRUE(verify_password(a, "longenough"));
  EXPECT_FALSE(verify_password(a, "longenougH"));
  // RFC 6070-style known answer for PBKDF2-HMAC-SHA256 ("password", "salt", 1 iteration).
  EXPECT_EQ(hash_password("password", "73616c74", 1).digest,
            "120fb6cffcf8b32c43e7225256c4f837a86548c92ccc35480805987cb70be17b");
}

TEST(Store, EmptyDirectoryAndFiles) {
  TempDir d;
  auto s = Store::open(d.path);
  EXPECT_EQ(s->user_count(), 0u);
  for (const char* f : {"users.jsonl", "profiles.jsonl", "records.jsonl", "reminders.jsonl", "log.jsonl"})
    EXPECT_TRUE(fs::exists(d.path / f)) << f;
  EXPECT_FALSE(s->load_kb());
  EXPECT_TRUE(s->tail_log(0).empty());
}

TEST(Store, RegisterAndAuthenticate) {
  TempDir d;
  Timestamp now = kMay1;
  auto s = Store::open(d.path, [&] { return now; });
  const auto u = s->register_user("A@B.c", "longenough", Role::Standard);
  EXPECT_EQ(u.email, "a@b.c");
  EXPECT_EQ(u.role, Role::Standard);
  EXPECT_EQ(u.password.salt.size(), 32u);
  EXPECT_EQ(code_of([&] { s->register_user("a@b.C", "otherlongpw", Role::Standard); }), ErrorCode::DuplicateEmail);
  EXPECT_EQ(code_of([&] { s->register_user("x@y.z", "short", Role::Standard); }), ErrorCode::WeakPassword);
  EXPECT_EQ(code_of([&] { s->register_user("nope", "longenough", Role::Standard); }), ErrorCode::InvalidEmail);

  const auto other = s->register_user("c@d.e", "longenough", Role::Healthcare);
  EXPECT_NE(other.password.salt, u.password.salt);
  EXPECT_NE(other.password.digest, u.password.digest);

  const auto t = s->authenticate("a@b.c", "longenough");
  EXPECT_EQ(t.token.size(), 32u);
  EXPECT_EQ(t.expires_at, kMay1 + 24 * 3600);
  EXPECT_EQ(s->verify_token(t.token).user_id, u.user_id);

  std::string wrong_pw, unknown;
  try {
    s->authenticate("a@b.c", "wrongpassword");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidCredentials);
    wrong_pw = e.what();
  }
  try {
    s->authenticate("zz@b.c", "longenough");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidCredentials);
    unknown = e.what();
  }
  EXPECT_EQ(wrong_pw, unknown);
  EXPECT_FALSE(unknown.empty());

  now += 24 * 3600 - 1;
  EXPECT_NO_THROW(s->verify_token(t.token));
  now += 1;
  EXPECT_EQ(code_of([&] { s->verify_token(t.token); }), ErrorCode::Expired);
  EXPECT_EQ(code_of([&] { s->verify_token("deadbeef"); }), ErrorCode::InvalidCredentials);

  // The password never reaches disk or the log in clear.
  EXPECT_EQ(slurp(d.path / "users.jsonl").find("longenough"), std::string::npos);
  EXPECT_EQ(slurp(d.path / "log.jsonl").find("longenough"), std::string::npos);
}

TEST(Store, RecordsOrderedAndFiltered) {
  TempDir d;
  Timestamp now = kMay1;
  auto s = Store::open(d.path, [&] { return now; });
  const auto u = s->register_user("a@b.c", "longenough", Role::Standard);
  s->append_record(u.user_id, RecordKind::Appointment, {{"where", "clinic"}});
  now += 60;
  s->append_record(u.user_id, RecordKind::Note, {{"text", "ok"}});
  now -= 3600;  // clock stepped back: the record still sorts last
  const auto last = s->append_record(u.user_id, RecordKind::Appointment, {{"where", "lab"}});
  EXPECT_EQ(last.at, kMay1 + 60);
  const auto all = s->list_records(u.user_id);
  ASSERT_EQ(all.size(), 3u);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LE(all[i - 1].at, all[i].at);
  EXPECT_EQ(all.back().record_id, last.record_id);
  const auto appts = s->list_records(u.user_id, RecordKind::Appointment);
  ASSERT_EQ(appts.size(), 2u);
  for (const auto& r : appts) EXPECT_EQ(r.kind, RecordKind::Appointment);
  EXPECT_EQ(code_of([&] { s->append_record("user-999", RecordKind::Note, {}); }), ErrorCode::UnknownUser);
  EXPECT_EQ(code_of([&] { s->list_records("user-999"); }), ErrorCode::UnknownUser);
}

TEST(Store, AppendOnlyPrefixAndReopen) {
  TempDir d;
  std::string prefix;
  std::string user_id, rem_id;
  {
    auto s = Store::open(d.path);
    const auto u = s->register_user("a@b.c", "longenough", Role::Standard);
    user_id = u.user_id;
    s->append_record(user_id, RecordKind::Measurement, {{"glucose", 5.4}});
    prefix = slurp(d.path / "records.jsonl");
    s->append_record(user_id, RecordKind::Note, {{"text", "x"}});
    EXPECT_EQ(slurp(d.path / "records.jsonl").substr(0, prefix.size()), prefix);
    rem_id = s->put_reminder({"", user_id, "pill", DailyAt{9, 0}, true}).reminder_id;
    s->put_reminder({rem_id, user_id, "pill", DailyAt{9, 0}, false});
    s->put_profile({user_id, {"diabetes"}, {"penicillin"}, 1980});
    s->put_session({{"session_id", "abc"}, {"state", "Active"}});
    s->put_session({{"session_id", "abc"}, {"state", "Finalized"}});
    s->save_kb({{"version", 3}});
    s->save_settings({{"alpha", 0.25}});
    s->append_log(LogLevel::Info, "test", "hello");
  }
  auto s = Store::open(d.path);
  EXPECT_EQ(s->user_count(), 1u);
  EXPECT_TRUE(s->find_user_by_email("A@b.c"));
  EXPECT_EQ(s->list_records(user_id).size(), 2u);
  const auto rems = s->reminders(user_id);
  ASSERT_EQ(rems.size(), 1u);
  EXPECT_FALSE(rems[0].active);  // last write wins
  EXPECT_EQ(s->profile(user_id)->chronic_conditions, std::vector<std::string>{"diabetes"});
  EXPECT_EQ(s->profile(user_id)->birth_year, 1980);
  EXPECT_EQ(s->session("abc")->at("state"), "Finalized");
  EXPECT_EQ(s->load_kb()->at("version"), 3);
  EXPECT_EQ(s->load_settings()->at("alpha"), 0.25);
  EXPECT_EQ(s->tail_log(1).at(0).message, "hello");
  // Fresh ids continue past the loaded ones.
  EXPECT_NE(s->register_user("x@y.z", "longenough", Role::Standard).user_id, user_id);
  EXPECT_NE(s->put_reminder({"", user_id, "b", DailyAt{1, 0}, true}).reminder_id, rem_id);
}

TEST(Store, CorruptLineSkippedAndLogged) {
  TempDir d;
  std::string user_id;
  {
    auto s = Store::open(d.path);
    user_id = s->register_user("a@b.c", "longenough", Role::Standard).user_id;
    s->append_record(user_id, RecordKind::Note, {{"n", 1}});
  }
  {
    std::ofstream out(d.path / "records.jsonl", std::ios::app);
    out << "{not json\n";
  }
  {
    auto s = Store::open(d.path);
    s->append_record(user_id, RecordKind::Note, {{"n", 2}});
  }
  auto s = Store::open(d.path);
  EXPECT_EQ(s->list_records(user_id).size(), 2u);
  bool logged = false;
  for (const auto& e : s->tail_log(100))
    if (e.level == LogLevel::Error && e.message.find("records.jsonl line 2") != std::string::npos) logged = true;
  EXPECT_TRUE(logged);
}

TEST(Store, TailLog) {
  TempDir d;
  auto s = Store::open(d.path);
  for (int i = 0; i < 5; ++i) s->append_log(LogLevel::Info, "t", std::to_string(i));
  EXPECT_TRUE(s->tail_log(0).empty());
  const auto two = s->tail_log(2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].message, "3");
  EXPECT_EQ(two[1].message, "4");
  EXPECT_EQ(s->tail_log(100).size(), 5u);
}

TEST(Store, ReminderOwnershipAndDue) {
  TempDir d;
  auto s = Store::open(d.path);
  const auto a = s->register_user("a@b.c", "longenough", Role::Standard).user_id;
  const auto b = s->register_user("b@b.c", "longenough", Role::Standard).user_id;
  const auto r = s->put_reminder({"", a, "pill", EveryNHours{8, kMay1}, true});
  EXPECT_EQ(code_of([&] { s->put_reminder({r.reminder_id, b, "x", DailyAt{9, 0}, true}); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([&] { s->put_reminder({"", a, "x", EveryNHours{0, 0}, true}); }), ErrorCode::InvalidParams);
  EXPECT_EQ(ids(s->due_reminders(a, kMay1 + 16 * 3600)), std::vector<std::string>{r.reminder_id});
  EXPECT_TRUE(s->due_reminders(b, kMay1 + 16 * 3600).empty());
}
