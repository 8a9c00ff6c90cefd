#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lattice/event_log.hpp"
#include "lattice/item.hpp"
#include "lattice/lattice.hpp"

namespace lattice {

enum class SessionStatus { InProgress, Finished };

struct PendingItem {
  ItemInstance instance;
  std::optional<std::string> submitted;
  bool correct = false;

  bool operator==(const PendingItem&) const = default;
};

struct HistoryEntry {
  int row = 0;
  int col = 0;
  int level = 1;
  std::string item_id;
  std::string submitted;
  bool correct = false;

  bool operator==(const HistoryEntry&) const = default;
};

struct Session {
  std::string session_id;
  std::string test_id;
  std::string student_key;
  LatticeConfig config;
  std::shared_ptr<const ItemBank> bank;
  PathState state;
  std::vector<PendingItem> pending_node;
  std::vector<HistoryEntry> history;
  SessionStatus status = SessionStatus::InProgress;
  double final_grade = 0.0;
  std::uint64_t last_seq = 0;  // sequence number of the latest logged event

  int answered() const noexcept { return static_cast<int>(history.size()); }
  int total() const noexcept { return config.total_questions(); }
};

// What the student sees. The item level is deliberately absent.
struct ItemView {
  std::string prompt;
  int answered = 0;
  int total = 0;
  int n_choices = 0;  // 0 for completion items
};

struct SessionResult {
  double grade = 0.0;
  int final_column = 0;
  std::vector<HistoryEntry> transcript;
};

// Throws ValidationError when some level 1..cfg.n_levels has no templates.
void check_bank_covers(const LatticeConfig& cfg, const ItemBank& bank);

Session create_session(const LatticeConfig& cfg, std::shared_ptr<const ItemBank> bank,
                       std::string student_key, std::string session_id = "local",
                       std::string test_id = "");

ItemView current_item(const Session& session);

// Records one answer. Completion items take the numeric text; multiple-choice
// items take the 1-based option number. Blank text is rejected; other
// non-numeric text is recorded as a wrong answer.
void submit_answer(Session& session, std::string_view submitted);
void submit_answer(Session& session, double submitted);

SessionResult result(const Session& session);

// Full state, used for transcripts and replay comparisons.
nlohmann::json to_json(const Session& session);
nlohmann::json to_json(const SessionResult& result);

struct RecoveredSessions {
  std::map<std::string, Session> sessions;
  std::vector<std::string> warnings;
};

// Rebuilds sessions from event records (create records embed config and bank).
RecoveredSessions recover(const std::vector<nlohmann::json>& records);
RecoveredSessions recover_file(const std::string& log_path);

// Named tests over registered configs and banks; thread-safe session store
// with per-session serialization and write-ahead logging.
class SessionService {
 public:
  struct Options {
    std::string log_path;  // empty: in-memory only
    bool sync = true;
  };

  SessionService();
  explicit SessionService(Options options);

  void register_config(const std::string& name, const LatticeConfig& cfg);
  void register_bank(const std::string& name, ItemBank bank);
  void register_test(const std::string& test_id, const std::string& config_name,
                     const std::string& bank_name);

  std::vector<std::string> test_ids() const;
  LatticeConfig test_config(const std::string& test_id) const;

  std::string create(const std::string& test_id, const std::string& student_key);
  std::string create(const std::string& config_name, const std::string& bank_name,
                     const std::string& student_key);

  ItemView current_item(const std::string& session_id) const;

  struct SubmitOutcome {
    bool accepted = true;  // false when expected_answered did not match
    bool finished = false;
    int answered = 0;
    int total = 0;
  };

  // When expected_answered is set and differs from the session's answered
  // count, nothing is recorded; this makes client retries idempotent.
  SubmitOutcome submit(const std::string& session_id, std::string_view answer,
                       std::optional<int> expected_answered = std::nullopt);

  SessionResult result(const std::string& session_id) const;
  Session snapshot(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;

  const std::vector<std::string>& recovery_warnings() const noexcept { return warnings_; }

 private:
  struct Slot {
    mutable std::mutex mu;
    Session session;
  };

  std::shared_ptr<Slot> find(const std::string& session_id) const;
  std::string create_impl(const std::string& test_id, const LatticeConfig& cfg,
                          std::shared_ptr<const ItemBank> bank, const std::string& student_key);

  mutable std::shared_mutex registry_mu_;
  std::map<std::string, LatticeConfig> configs_;
  std::map<std::string, std::shared_ptr<const ItemBank>> banks_;
  std::map<std::string, std::pair<std::string, std::string>> tests_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t next_id_ = 1;

  std::unique_ptr<EventLog> log_;
  std::vector<std::string> warnings_;
};

}  // namespace lattice
