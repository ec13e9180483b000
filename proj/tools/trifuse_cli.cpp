// Command-line driver: gen-data -> pretrain -> train -> eval -> ablate.
// Every stage is deterministic given its config, so reruns produce
// byte-identical datasets, checkpoints, and reports.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trifuse/checkpoint.hpp"
#include "trifuse/curriculum.hpp"
#include "trifuse/errors.hpp"
#include "trifuse/evalkit.hpp"
#include "trifuse/util.hpp"

namespace fs = std::filesystem;
using namespace trifuse;

namespace {

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value config file");
  cmd->add_option("--set", args.overrides, "override, e.g. --set train_steps=300");
}

Config resolve_config(const ConfigArgs& args) {
  Config cfg = args.config_path.empty() ? Config{} : Config::load(args.config_path);
  for (const std::string& kv : args.overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override must be key=value: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

struct World {
  std::vector<Item> catalog;
  std::vector<UserSequence> users;
  ItemBehaviorGraph graph;
  ModalityTables tables;
};

World load_world(const Config& cfg, const std::string& dir) {
  World w;
  w.catalog = load_catalog(dir + "/catalog.jsonl");
  w.users = load_sequences(dir + "/sequences.jsonl");
  w.graph = load_graph(dir + "/graph.jsonl", int(w.catalog.size()));
  std::string tables_path = dir + "/tables.json";
  if (fs::exists(tables_path)) {
    w.tables = load_tables(tables_path);
  } else {
    w.tables = build_tables(cfg, w.catalog, w.graph);
  }
  return w;
}

std::vector<UserSequence> train_slice(const Config& cfg, const std::vector<UserSequence>& users) {
  size_t n = train_count(cfg, users.size());
  return {users.begin(), users.begin() + long(n)};
}

std::vector<UserSequence> eval_slice(const Config& cfg, const std::vector<UserSequence>& users) {
  size_t n = train_count(cfg, users.size());
  return {users.begin() + long(n), users.end()};
}

nlohmann::json data_hashes(const std::string& dir) {
  nlohmann::json out;
  for (const char* name : {"catalog.jsonl", "sequences.jsonl", "graph.jsonl"}) {
    std::string path = dir + "/" + name;
    if (fs::exists(path)) out[name] = file_hash(path);
  }
  return out;
}

double mean_eval_loss(const TmfModel& model, const ModalityTables& tables,
                      const std::vector<Item>& catalog, const std::vector<UserSequence>& instances,
                      PromptLevel level, bool use_cma) {
  if (instances.empty()) return 0.0;
  double total = 0.0;
  for (const UserSequence& seq : instances) {
    Tape tape(false);
    TensorPtr loss = example_loss(tape, model, tables, catalog, seq, level, seq.user_id, use_cma);
    total += double(loss->v()[0]);
  }
  return total / double(instances.size());
}

int cmd_gen_data(const ConfigArgs& args, const std::string& out_dir) {
  Config cfg = resolve_config(args);
  fs::create_directories(out_dir);
  Dataset data = generate_dataset(cfg);
  ModalityTables tables = build_tables(cfg, data.catalog, data.graph);

  save_catalog(out_dir + "/catalog.jsonl", data.catalog);
  save_sequences(out_dir + "/sequences.jsonl", data.users);
  save_graph(out_dir + "/graph.jsonl", data.graph);
  save_tables(out_dir + "/tables.json", tables, cfg);
  write_file(out_dir + "/config.json", cfg.to_json().dump(2) + "\n");

  nlohmann::json manifest = {{"config", cfg.to_json()},
                             {"n_items", data.catalog.size()},
                             {"n_users", data.users.size()},
                             {"n_train", train_count(cfg, data.users.size())},
                             {"hashes", data_hashes(out_dir)}};
  manifest["hashes"]["tables.json.f32"] = file_hash(out_dir + "/tables.json.f32");
  write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  std::cout << manifest.dump() << "\n";
  return 0;
}

int cmd_pretrain(const ConfigArgs& args, const std::string& data_dir, const std::string& out_dir) {
  Config cfg = resolve_config(args);
  World w = load_world(cfg, data_dir);
  fs::create_directories(out_dir);

  TmfModel model = TmfModel::init(cfg, w.catalog);
  std::vector<TrainLogRow> log = pretrain_base(model, w.tables, w.catalog, train_slice(cfg, w.users));

  ParamStore store;
  model.register_all(store);
  save_checkpoint(out_dir + "/base_ckpt.json", store,
                  {{"phase", "pretrain"}, {"seed", std::to_string(cfg.seed)}});
  write_train_log(out_dir + "/pretrain_log.csv", log);

  nlohmann::json report = {{"phase", "pretrain"},
                           {"config", cfg.to_json()},
                           {"steps", log.size()},
                           {"final_loss", log.empty() ? 0.0 : log.back().loss},
                           {"checkpoint", out_dir + "/base_ckpt.json"},
                           {"data_hashes", data_hashes(data_dir)}};
  write_file(out_dir + "/pretrain_report.json", report.dump(2) + "\n");
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_train(const ConfigArgs& args, const std::string& data_dir, const std::string& base_ckpt,
              const std::string& out_dir, const std::string& max_level_name, bool no_cma) {
  Config cfg = resolve_config(args);
  World w = load_world(cfg, data_dir);
  fs::create_directories(out_dir);

  TmfModel model = TmfModel::init(cfg, w.catalog);
  {
    ParamStore base_store;
    model.register_all(base_store);
    load_checkpoint(base_ckpt, base_store);
  }
  model.lm.attach_lora(cfg.seed, cfg.lora_r, cfg.lora_alpha);

  PromptLevel max_level = level_from_name(max_level_name);
  std::vector<TrainLogRow> log =
      train_curriculum(model, w.tables, w.catalog, train_slice(cfg, w.users), max_level, !no_cma);

  ParamStore store;
  model.register_all(store);
  save_checkpoint(out_dir + "/model_ckpt.json", store,
                  {{"phase", "train"},
                   {"seed", std::to_string(cfg.seed)},
                   {"lora_r", std::to_string(cfg.lora_r)},
                   {"lora_alpha", std::to_string(cfg.lora_alpha)},
                   {"max_level", level_name(max_level)},
                   {"use_cma", no_cma ? "0" : "1"}});
  write_train_log(out_dir + "/train_log.csv", log);

  nlohmann::json report = {{"phase", "train"},
                           {"config", cfg.to_json()},
                           {"base_checkpoint", base_ckpt},
                           {"max_level", level_name(max_level)},
                           {"use_cma", !no_cma},
                           {"steps", log.size()},
                           {"final_loss", log.empty() ? 0.0 : log.back().loss},
                           {"checkpoint", out_dir + "/model_ckpt.json"},
                           {"data_hashes", data_hashes(data_dir)}};
  write_file(out_dir + "/train_report.json", report.dump(2) + "\n");
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_eval(const ConfigArgs& args, const std::string& data_dir, const std::string& ckpt,
             const std::string& report_path, std::string instances_path,
             const std::string& level_name_arg, bool no_cma) {
  Config cfg = resolve_config(args);
  World w = load_world(cfg, data_dir);

  std::map<std::string, std::string> meta = checkpoint_meta(ckpt);
  TmfModel model = TmfModel::init(cfg, w.catalog);
  if (meta.count("lora_r")) {
    model.lm.attach_lora(cfg.seed, std::stoi(meta.at("lora_r")),
                         std::stof(meta.at("lora_alpha")));
  }
  ParamStore store;
  model.register_all(store);
  load_checkpoint(ckpt, store);

  PromptLevel level = level_from_name(level_name_arg);
  std::vector<UserSequence> instances = eval_slice(cfg, w.users);
  EvalResult result = run_eval(model, w.tables, w.catalog, instances, level, !no_cma);
  double loss = mean_eval_loss(model, w.tables, w.catalog, instances, level, !no_cma);

  if (instances_path.empty()) instances_path = report_path + ".jsonl";
  if (fs::path(report_path).has_parent_path()) {
    fs::create_directories(fs::path(report_path).parent_path());
  }
  write_instance_log(instances_path, result.records, instances, w.catalog);

  nlohmann::json report = {{"phase", "eval"},
                           {"config", cfg.to_json()},
                           {"checkpoint", ckpt},
                           {"checkpoint_meta", meta},
                           {"level", level_name(level)},
                           {"use_cma", !no_cma},
                           {"hitrate_at_1", result.metrics.hitrate_at_1},
                           {"valid_ratio", result.metrics.valid_ratio},
                           {"n_instances", result.metrics.n_instances},
                           {"mean_eval_loss", loss},
                           {"instance_log", instances_path},
                           {"data_hashes", data_hashes(data_dir)}};
  write_file(report_path, report.dump(2) + "\n");
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_ablate(const ConfigArgs& args, const std::string& data_dir,
               const std::string& report_dir) {
  Config cfg = resolve_config(args);
  World w = load_world(cfg, data_dir);
  fs::create_directories(report_dir);

  Dataset data;
  data.catalog = w.catalog;
  data.users = w.users;
  data.graph = w.graph;
  std::vector<AblationRow> rows = run_ablation(cfg, data, w.tables);

  write_file(report_dir + "/ablation.csv", ablation_csv(rows));
  nlohmann::json report = {{"phase", "ablate"},
                           {"config", cfg.to_json()},
                           {"rows", ablation_json(rows)},
                           {"data_hashes", data_hashes(data_dir)}};
  write_file(report_dir + "/ablation.json", report.dump(2) + "\n");
  std::cout << report.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"triple-modality recommender pipeline"};
  app.require_subcommand(1);

  ConfigArgs gen_args;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic shopping dataset");
  add_config_options(gen, gen_args);
  gen->add_option("--seed", [&gen_args](const std::vector<std::string>& v) {
    gen_args.overrides.push_back("seed=" + v.back());
    return true;
  }, "shorthand for --set seed=N");
  gen->add_option("--items", [&gen_args](const std::vector<std::string>& v) {
    gen_args.overrides.push_back("items=" + v.back());
    return true;
  }, "shorthand for --set items=N");
  gen->add_option("--users", [&gen_args](const std::vector<std::string>& v) {
    gen_args.overrides.push_back("users=" + v.back());
    return true;
  }, "shorthand for --set users=N");
  gen->add_option("--out", gen_out, "output directory")->required();

  ConfigArgs pre_args;
  std::string pre_data, pre_out;
  CLI::App* pre = app.add_subcommand("pretrain", "train the base model on easy prompts");
  add_config_options(pre, pre_args);
  pre->add_option("--data", pre_data, "dataset directory")->required();
  pre->add_option("--out", pre_out, "output directory")->required();

  ConfigArgs train_args;
  std::string train_data, train_base, train_out, train_level = "hard";
  bool train_no_cma = false;
  CLI::App* train = app.add_subcommand("train", "curriculum-tune adapters on a pretrained base");
  add_config_options(train, train_args);
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--base", train_base, "base checkpoint manifest")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--max-level", train_level, "cap sampled levels: easy|medium|hard");
  train->add_flag("--no-cma", train_no_cma, "skip cross-modality attention in item tokens");

  ConfigArgs eval_args;
  std::string eval_data, eval_ckpt, eval_report, eval_instances, eval_level = "hard";
  bool eval_no_cma = false;
  CLI::App* eval = app.add_subcommand("eval", "score held-out users");
  add_config_options(eval, eval_args);
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--ckpt", eval_ckpt, "checkpoint manifest")->required();
  eval->add_option("--report", eval_report, "report json path")->required();
  eval->add_option("--instances", eval_instances, "per-instance jsonl path");
  eval->add_option("--level", eval_level, "prompt level: easy|medium|hard");
  eval->add_flag("--no-cma", eval_no_cma, "skip cross-modality attention in item tokens");

  ConfigArgs abl_args;
  std::string abl_data, abl_report;
  CLI::App* abl = app.add_subcommand("ablate", "run the four-rung ablation ladder");
  add_config_options(abl, abl_args);
  abl->add_option("--data", abl_data, "dataset directory")->required();
  abl->add_option("--report-dir", abl_report, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(gen_args, gen_out);
    if (pre->parsed()) return cmd_pretrain(pre_args, pre_data, pre_out);
    if (train->parsed()) {
      return cmd_train(train_args, train_data, train_base, train_out, train_level, train_no_cma);
    }
    if (eval->parsed()) {
      return cmd_eval(eval_args, eval_data, eval_ckpt, eval_report, eval_instances, eval_level,
                      eval_no_cma);
    }
    if (abl->parsed()) return cmd_ablate(abl_args, abl_data, abl_report);
  } catch (const Error& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
