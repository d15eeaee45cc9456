#include "exitrl/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "exitrl/error.hpp"

namespace exitrl::harness {

using nlohmann::json;

namespace {

json to_json(const sidp::BaseTask& task) {
  json j{{"task_id", task.task_id},
         {"env_kind", sidp::to_string(task.env_kind)},
         {"seed", task.seed}};
  if (task.env_kind == sidp::EnvKind::BitstringRepair) {
    j["length"] = task.bitstring().length;
    j["corruption_prob"] = task.bitstring().corruption_prob;
  } else {
    j["turns"] = task.key_sequence().turns;
    j["vocab"] = task.key_sequence().vocab;
  }
  return j;
}

sidp::BaseTask task_from_json(const json& j) {
  sidp::BaseTask task;
  task.task_id = j.at("task_id").get<std::string>();
  task.seed = j.at("seed").get<std::uint64_t>();
  const auto kind = j.at("env_kind").get<std::string>();
  if (kind == "bitstring_repair") {
    task.env_kind = sidp::EnvKind::BitstringRepair;
    task.params = sidp::BitstringParams{j.at("length").get<std::uint32_t>(),
                                        j.at("corruption_prob").get<double>()};
  } else {
    task.env_kind = sidp::EnvKind::MultiTurnKeySequence;
    task.params = sidp::KeySequenceParams{j.at("turns").get<std::uint32_t>(),
                                          j.at("vocab").get<std::uint32_t>()};
  }
  return task;
}

json to_json(const sidp::Iterate& it) {
  json j{{"tokens", it.tokens}, {"quality", it.quality}, {"depth", it.depth}};
  if (it.feedback) j["feedback"] = *it.feedback;
  if (it.position_feedback) j["position_feedback"] = *it.position_feedback;
  return j;
}

sidp::Iterate iterate_from_json(const json& j) {
  sidp::Iterate it;
  it.tokens = j.at("tokens").get<std::vector<std::uint32_t>>();
  it.quality = j.at("quality").get<double>();
  it.depth = j.at("depth").get<std::uint32_t>();
  if (j.contains("feedback")) it.feedback = j.at("feedback").get<double>();
  if (j.contains("position_feedback"))
    it.position_feedback = j.at("position_feedback").get<std::vector<double>>();
  return it;
}

json to_json(const sidp::History& history) {
  json turns = json::array();
  for (const auto& chain : history.turns) {
    json c = json::array();
    for (const auto& it : chain) c.push_back(to_json(it));
    turns.push_back(std::move(c));
  }
  return turns;
}

sidp::History history_from_json(const json& j) {
  sidp::History history;
  for (const auto& chain : j) {
    std::vector<sidp::Iterate> c;
    for (const auto& it : chain) c.push_back(iterate_from_json(it));
    history.turns.push_back(std::move(c));
  }
  return history;
}

json to_json(const curriculum::TaskInstance& inst) {
  json j{{"id", inst.id},
         {"base", to_json(inst.base)},
         {"depth", inst.depth},
         {"history", to_json(inst.history)},
         {"created_at", inst.created_at}};
  if (inst.lineage) j["lineage"] = *inst.lineage;
  return j;
}

curriculum::TaskInstance instance_from_json(const json& j) {
  curriculum::TaskInstance inst;
  inst.id = j.at("id").get<curriculum::InstanceId>();
  inst.base = task_from_json(j.at("base"));
  inst.depth = j.at("depth").get<std::uint32_t>();
  inst.history = history_from_json(j.at("history"));
  inst.created_at = j.at("created_at").get<std::uint64_t>();
  if (j.contains("lineage")) inst.lineage = j.at("lineage").get<curriculum::InstanceId>();
  return inst;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  json root;
  root["version"] = kCheckpointVersion;
  root["config"] = json::parse(config::dump_config(state.config));
  root["iteration"] = state.iteration;
  root["featurization"] = {
      {"env_kind", sidp::to_string(state.config.env.kind)},
      {"alphabet", state.config.env_alphabet()},
      {"hash_features", state.config.env.hash_features},
      {"dim", state.theta.values.size()},
  };
  root["theta"] = state.theta.values;
  root["theta_ref"] = state.theta_ref.values;
  root["optimizer"] = {{"first_moment", state.optimizer.first_moment},
                       {"second_moment", state.optimizer.second_moment},
                       {"step", state.optimizer.step}};
  json entries = json::array();
  for (const auto& e : state.buffer.entries()) {
    entries.push_back(json{{"instance", to_json(e.instance)},
                           {"score", e.score},
                           {"inherited", e.inherited}});
  }
  root["buffer"] = {{"entries", std::move(entries)}};
  root["next_instance_id"] = state.ids.peek();
  root["sample_rng_state"] = state.sample_rng_state;
  root["distinct_hashes"] = state.distinct_hashes;

  std::ofstream out(path);
  if (!out) throw StructuralError("checkpoint: cannot write " + path.string());
  out << root.dump() << "\n";
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("checkpoint: cannot open " + path.string());
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw StructuralError("checkpoint: parse error: " + std::string(e.what()));
  }
  if (root.at("version").get<int>() != kCheckpointVersion)
    throw StructuralError("checkpoint: unsupported version");

  TrainState state;
  state.config = config::parse_config(root.at("config").dump());
  state.iteration = root.at("iteration").get<std::uint64_t>();
  state.theta.values = root.at("theta").get<std::vector<double>>();
  state.theta.role = policy::ParamRole::Current;
  state.theta_ref.values = root.at("theta_ref").get<std::vector<double>>();
  state.theta_ref.role = policy::ParamRole::Reference;
  const auto& opt = root.at("optimizer");
  state.optimizer.first_moment = opt.at("first_moment").get<std::vector<double>>();
  state.optimizer.second_moment = opt.at("second_moment").get<std::vector<double>>();
  state.optimizer.step = opt.at("step").get<std::uint64_t>();

  const auto expected_dim = state.config.make_featurizer().spec().dim();
  if (root.at("featurization").at("dim").get<std::size_t>() != state.theta.values.size() ||
      state.theta.values.size() != expected_dim)
    throw StructuralError("checkpoint: featurization descriptor does not match parameters");

  state.buffer = curriculum::TaskBuffer(state.config.buffer_config());
  std::vector<curriculum::BufferEntry> entries;
  for (const auto& e : root.at("buffer").at("entries")) {
    curriculum::BufferEntry entry;
    entry.instance = instance_from_json(e.at("instance"));
    entry.score = e.at("score").get<double>();
    entry.inherited = e.at("inherited").get<bool>();
    entries.push_back(std::move(entry));
  }
  state.buffer.restore_entries(std::move(entries));
  state.ids.restore(root.at("next_instance_id").get<curriculum::InstanceId>());
  state.sample_rng_state = root.at("sample_rng_state").get<std::uint64_t>();
  state.distinct_hashes = root.at("distinct_hashes").get<std::vector<std::uint64_t>>();
  return state;
}

}  // namespace exitrl::harness
