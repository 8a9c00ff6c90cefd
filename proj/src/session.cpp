#include "lattice/session.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "lattice/errors.hpp"
#include "lattice/io.hpp"
#include "lattice/rng.hpp"

namespace lattice {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::set<std::string> used_templates(const Session& s) {
  std::set<std::string> used;
  for (const auto& h : s.history) used.insert(h.item_id);
  for (const auto& p : s.pending_node) used.insert(p.instance.template_id);
  return used;
}

// Fills pending_node for the node at the current state. Templates are drawn
// per (bank seed, student, row) and avoid repeats while the level pool allows.
void serve_node(Session& s) {
  const int level = level_of_column(s.config, s.state.col);
  const auto pool = s.bank->at_level(level);
  CounterRng rng(s.bank->seed,
                 combine_keys(fnv1a64(s.student_key), static_cast<std::uint64_t>(s.state.row)));
  auto used = used_templates(s);
  s.pending_node.clear();
  for (int i = 0; i < s.config.items_per_node; ++i) {
    std::vector<const ItemTemplate*> fresh;
    for (const auto* t : pool) {
      if (!used.count(t->id)) fresh.push_back(t);
    }
    const auto& candidates = fresh.empty() ? pool : fresh;
    const ItemTemplate* chosen = candidates[rng.below(candidates.size())];
    used.insert(chosen->id);
    const int slot = s.state.row * s.config.items_per_node + i;
    const std::string instance_key = s.student_key + "#" + std::to_string(slot);
    s.pending_node.push_back(PendingItem{instantiate(*chosen, instance_key, s.bank->seed), {}, false});
  }
}

bool grade_submission(const ItemInstance& inst, std::string_view text) {
  const auto value = parse_numeric_answer(text);
  if (!value) {
    return false;
  }
  if (inst.choices.empty()) {
    return check_answer(inst, *value, inst.tolerance);
  }
  const double option = *value;
  if (option != std::floor(option) || option < 1 || option > static_cast<double>(inst.choices.size())) {
    return false;
  }
  return static_cast<int>(option) - 1 == inst.correct_choice;
}

json history_json(const HistoryEntry& h) {
  return {{"row", h.row},           {"col", h.col},           {"level", h.level},
          {"item_id", h.item_id},   {"submitted", h.submitted}, {"correct", h.correct}};
}

std::string format_session_id(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(n));
  return buf;
}

}  // namespace

void check_bank_covers(const LatticeConfig& cfg, const ItemBank& bank) {
  for (int level = 1; level <= cfg.n_levels; ++level) {
    if (bank.at_level(level).empty()) {
      throw ValidationError("item bank has no templates for level " + std::to_string(level));
    }
  }
}

Session create_session(const LatticeConfig& cfg, std::shared_ptr<const ItemBank> bank,
                       std::string student_key, std::string session_id, std::string test_id) {
  validate(cfg);
  if (!bank) {
    throw ValidationError("session needs an item bank");
  }
  check_bank_covers(cfg, *bank);
  Session s;
  s.session_id = std::move(session_id);
  s.test_id = std::move(test_id);
  s.student_key = std::move(student_key);
  s.config = cfg;
  s.bank = std::move(bank);
  serve_node(s);
  return s;
}

ItemView current_item(const Session& s) {
  if (s.status == SessionStatus::Finished) {
    throw StateError("session " + s.session_id + " is finished");
  }
  for (const auto& p : s.pending_node) {
    if (!p.submitted) {
      return ItemView{p.instance.rendered_prompt, s.answered(), s.total(),
                      static_cast<int>(p.instance.choices.size())};
    }
  }
  throw StateError("session " + s.session_id + " has no pending item");
}

void submit_answer(Session& s, std::string_view submitted) {
  if (s.status == SessionStatus::Finished) {
    throw StateError("session " + s.session_id + " is finished");
  }
  const std::string_view text = trim(submitted);
  if (text.empty()) {
    throw ValidationError("blank answers are not accepted");
  }
  auto it = std::find_if(s.pending_node.begin(), s.pending_node.end(),
                         [](const PendingItem& p) { return !p.submitted; });
  if (it == s.pending_node.end()) {
    throw StateError("session " + s.session_id + " has no pending item");
  }
  it->submitted = std::string(text);
  it->correct = grade_submission(it->instance, text);
  s.history.push_back(HistoryEntry{s.state.row, s.state.col, level_of_column(s.config, s.state.col),
                                   it->instance.template_id, std::string(text), it->correct});

  if (std::any_of(s.pending_node.begin(), s.pending_node.end(),
                  [](const PendingItem& p) { return !p.submitted; })) {
    return;
  }
  auto outcomes = std::make_unique<bool[]>(s.pending_node.size());
  for (std::size_t i = 0; i < s.pending_node.size(); ++i) outcomes[i] = s.pending_node[i].correct;
  const bool node_ok =
      node_outcome(s.config, std::span<const bool>(outcomes.get(), s.pending_node.size()));
  s.state = advance(s.config, s.state, node_ok);
  s.pending_node.clear();
  if (is_terminal(s.config, s.state)) {
    s.status = SessionStatus::Finished;
    s.final_grade = grade(s.config, s.state.col);
  } else {
    serve_node(s);
  }
}

void submit_answer(Session& s, double submitted) {
  submit_answer(s, std::string_view(expr::format_number(submitted)));
}

SessionResult result(const Session& s) {
  if (s.status != SessionStatus::Finished) {
    throw StateError("session " + s.session_id + " is still in progress");
  }
  return SessionResult{s.final_grade, s.state.col, s.history};
}

json to_json(const Session& s) {
  json pending = json::array();
  for (const auto& p : s.pending_node) {
    pending.push_back({{"instance", to_json(p.instance)},
                       {"submitted", p.submitted ? json(*p.submitted) : json(nullptr)},
                       {"correct", p.correct}});
  }
  json history = json::array();
  for (const auto& h : s.history) history.push_back(history_json(h));
  return {{"session_id", s.session_id},
          {"test_id", s.test_id},
          {"student_key", s.student_key},
          {"config", to_json(s.config)},
          {"state", {{"row", s.state.row}, {"col", s.state.col}}},
          {"status", s.status == SessionStatus::Finished ? "finished" : "in_progress"},
          {"final_grade", s.final_grade},
          {"last_seq", s.last_seq},
          {"pending", pending},
          {"history", history}};
}

json to_json(const SessionResult& r) {
  json transcript = json::array();
  for (const auto& h : r.transcript) transcript.push_back(history_json(h));
  return {{"grade", r.grade}, {"final_column", r.final_column}, {"transcript", transcript}};
}

RecoveredSessions recover(const std::vector<json>& records) {
  RecoveredSessions out;
  std::map<std::string, std::shared_ptr<const ItemBank>> bank_cache;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const std::string where = "event record " + std::to_string(i + 1);
    try {
      const auto id = rec.at("session").get<std::string>();
      const auto type = rec.at("type").get<std::string>();
      const auto seq = rec.at("seq").get<std::uint64_t>();
      if (type == "create") {
        if (out.sessions.count(id)) {
          throw Error(where + ": duplicate session " + id);
        }
        if (seq != 1) {
          throw Error(where + ": create record must have seq 1");
        }
        const std::string bank_text = rec.at("bank").dump();
        auto& bank = bank_cache[bank_text];
        if (!bank) {
          bank = std::make_shared<const ItemBank>(parse_bank(rec.at("bank")));
        }
        Session s = create_session(config_from_json(rec.at("config")), bank,
                                   rec.at("student_key").get<std::string>(), id,
                                   rec.value("test", std::string{}));
        s.last_seq = seq;
        out.sessions.emplace(id, std::move(s));
      } else if (type == "answer") {
        auto it = out.sessions.find(id);
        if (it == out.sessions.end()) {
          throw Error(where + ": answer for unknown session " + id);
        }
        if (seq != it->second.last_seq + 1) {
          throw Error(where + ": sequence gap in session " + id);
        }
        submit_answer(it->second, rec.at("answer").get<std::string>());
        it->second.last_seq = seq;
      } else {
        throw Error(where + ": unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError(where + " is malformed: " + e.what());
    }
  }
  return out;
}

RecoveredSessions recover_file(const std::string& log_path) {
  auto log = read_log(log_path);
  auto out = recover(log.records);
  out.warnings.insert(out.warnings.begin(), log.warnings.begin(), log.warnings.end());
  return out;
}

SessionService::SessionService() : SessionService(Options{}) {}

SessionService::SessionService(Options options) {
  if (options.log_path.empty()) {
    return;
  }
  auto recovered = recover_file(options.log_path);
  warnings_ = std::move(recovered.warnings);
  for (auto& [id, session] : recovered.sessions) {
    if (id.size() > 1 && id[0] == 's') {
      try {
        next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(1)) + 1);
      } catch (const std::exception&) {
      }
    }
    auto slot = std::make_shared<Slot>();
    slot->session = std::move(session);
    sessions_.emplace(id, std::move(slot));
  }
  log_ = std::make_unique<EventLog>(options.log_path, options.sync);
}

void SessionService::register_config(const std::string& name, const LatticeConfig& cfg) {
  validate(cfg);
  std::unique_lock lock(registry_mu_);
  configs_[name] = cfg;
}

void SessionService::register_bank(const std::string& name, ItemBank bank) {
  std::unique_lock lock(registry_mu_);
  banks_[name] = std::make_shared<const ItemBank>(std::move(bank));
}

void SessionService::register_test(const std::string& test_id, const std::string& config_name,
                                   const std::string& bank_name) {
  std::unique_lock lock(registry_mu_);
  const auto cfg = configs_.find(config_name);
  const auto bank = banks_.find(bank_name);
  if (cfg == configs_.end()) throw NotFoundError("unknown config '" + config_name + "'");
  if (bank == banks_.end()) throw NotFoundError("unknown bank '" + bank_name + "'");
  check_bank_covers(cfg->second, *bank->second);
  tests_[test_id] = {config_name, bank_name};
}

std::vector<std::string> SessionService::test_ids() const {
  std::shared_lock lock(registry_mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : tests_) ids.push_back(id);
  return ids;
}

LatticeConfig SessionService::test_config(const std::string& test_id) const {
  std::shared_lock lock(registry_mu_);
  const auto it = tests_.find(test_id);
  if (it == tests_.end()) throw NotFoundError("unknown test '" + test_id + "'");
  return configs_.at(it->second.first);
}

std::string SessionService::create(const std::string& test_id, const std::string& student_key) {
  LatticeConfig cfg;
  std::shared_ptr<const ItemBank> bank;
  {
    std::shared_lock lock(registry_mu_);
    const auto it = tests_.find(test_id);
    if (it == tests_.end()) throw NotFoundError("unknown test '" + test_id + "'");
    cfg = configs_.at(it->second.first);
    bank = banks_.at(it->second.second);
  }
  return create_impl(test_id, cfg, std::move(bank), student_key);
}

std::string SessionService::create(const std::string& config_name, const std::string& bank_name,
                                   const std::string& student_key) {
  LatticeConfig cfg;
  std::shared_ptr<const ItemBank> bank;
  {
    std::shared_lock lock(registry_mu_);
    const auto c = configs_.find(config_name);
    const auto b = banks_.find(bank_name);
    if (c == configs_.end()) throw NotFoundError("unknown config '" + config_name + "'");
    if (b == banks_.end()) throw NotFoundError("unknown bank '" + bank_name + "'");
    cfg = c->second;
    bank = b->second;
  }
  return create_impl("", cfg, std::move(bank), student_key);
}

std::string SessionService::create_impl(const std::string& test_id, const LatticeConfig& cfg,
                                        std::shared_ptr<const ItemBank> bank,
                                        const std::string& student_key) {
  if (trim(student_key).empty()) {
    throw ValidationError("student key must be non-empty");
  }
  std::unique_lock lock(sessions_mu_);
  const std::string id = format_session_id(next_id_);
  auto slot = std::make_shared<Slot>();
  slot->session = create_session(cfg, bank, student_key, id, test_id);
  slot->session.last_seq = 1;
  if (log_) {
    log_->append({{"seq", 1},
                  {"session", id},
                  {"type", "create"},
                  {"test", test_id},
                  {"student_key", student_key},
                  {"config", to_json(cfg)},
                  {"bank", to_json(*bank)}});
  }
  ++next_id_;
  sessions_.emplace(id, std::move(slot));
  return id;
}

std::shared_ptr<SessionService::Slot> SessionService::find(const std::string& session_id) const {
  std::shared_lock lock(sessions_mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw NotFoundError("unknown session '" + session_id + "'");
  }
  return it->second;
}

ItemView SessionService::current_item(const std::string& session_id) const {
  auto slot = find(session_id);
  std::lock_guard lock(slot->mu);
  return lattice::current_item(slot->session);
}

SessionService::SubmitOutcome SessionService::submit(const std::string& session_id,
                                                     std::string_view answer,
                                                     std::optional<int> expected_answered) {
  auto slot = find(session_id);
  std::lock_guard lock(slot->mu);
  const Session& current = slot->session;
  if (expected_answered && *expected_answered != current.answered()) {
    return SubmitOutcome{false, current.status == SessionStatus::Finished, current.answered(),
                         current.total()};
  }
  Session next = current;
  submit_answer(next, answer);
  next.last_seq = current.last_seq + 1;
  if (log_) {
    log_->append({{"seq", next.last_seq},
                  {"session", session_id},
                  {"type", "answer"},
                  {"answer", next.history.back().submitted}});
  }
  slot->session = std::move(next);
  const Session& s = slot->session;
  return SubmitOutcome{true, s.status == SessionStatus::Finished, s.answered(), s.total()};
}

SessionResult SessionService::result(const std::string& session_id) const {
  auto slot = find(session_id);
  std::lock_guard lock(slot->mu);
  return lattice::result(slot->session);
}

Session SessionService::snapshot(const std::string& session_id) const {
  auto slot = find(session_id);
  std::lock_guard lock(slot->mu);
  return slot->session;
}

std::vector<std::string> SessionService::session_ids() const {
  std::shared_lock lock(sessions_mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

}  // namespace lattice
