#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "respsel/config.hpp"
#include "respsel/errors.hpp"
#include "respsel/pipeline.hpp"
#include "respsel/service.hpp"
#include "respsel/synthetic.hpp"

using namespace respsel;
using nlohmann::json;

namespace {

respsel::HttpService* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> work_dir;
};

PipelineConfig load(const Common& c) {
  if (c.config.empty()) throw ConfigError("--config is required");
  PipelineConfig cfg = load_config(c.config);
  if (c.seed) cfg.override_seed(*c.seed);
  if (c.work_dir) cfg.paths.work_dir = *c.work_dir;
  cfg.validate();
  return cfg;
}

std::vector<Utterance> read_context(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), 1);
  }
  const json& arr = j.is_object() ? j.at("context") : j;
  std::vector<Utterance> out;
  for (const auto& u : arr) out.push_back(utterance_from_json(u));
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Response selection pipeline: script library, recall and rubric ranking"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "pipeline config file");
  app.add_option("--seed", common.seed, "seed applied to every stochastic stage");
  app.add_option("--work-dir", common.work_dir, "override paths.work_dir");

  ReviewArgs review;
  std::string verdict = "approve";
  std::string ids_file;
  std::map<std::string, Stage> stage_of;
  for (Stage s : all_stages()) {
    auto* sub = app.add_subcommand(to_string(s), std::string("run the ") + to_string(s) + " stage");
    stage_of[to_string(s)] = s;
    if (s == Stage::review) {
      sub->add_option("--id", review.ids, "script id (repeatable, comma separated)");
      sub->add_option("--ids-file", ids_file, "file with one script id per line");
      sub->add_flag("--all-pending", review.all_pending, "review every pending script");
      sub->add_option("--verdict", verdict, "approve or reject")->check(CLI::IsMember({"approve", "reject"}));
      sub->add_option("--reviewer", review.reviewer, "reviewer name");
      sub->add_option("--at", review.timestamp, "audit timestamp (ISO-8601 UTC)");
    }
  }

  auto* serve = app.add_subcommand("serve", "serve POST /respond and the script endpoints");
  std::optional<std::string> host;
  std::optional<int> port;
  std::string port_file;
  serve->add_option("--host", host);
  serve->add_option("--port", port, "0 picks a free port");
  serve->add_option("--port-file", port_file, "write the bound port here once listening");

  auto* respond = app.add_subcommand("respond", "answer one request offline");
  std::string context_file, purpose;
  respond->add_option("--context", context_file, "JSON file: array of {speaker,text} or {context:[...]}")->required();
  respond->add_option("--purpose", purpose)->required();

  auto* synth = app.add_subcommand("synth", "write the synthetic corpus bundle");
  std::string out_dir;
  synthetic::CorpusOptions copts;
  synth->add_option("--out", out_dir)->required();
  synth->add_option("--dialogues", copts.dialogues);
  synth->add_option("--corpus-seed", copts.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (synth->parsed()) {
    synthetic::write_bundle(out_dir, copts);
    std::cout << json{{"written", out_dir}}.dump() << "\n";
    return 0;
  }

  const PipelineConfig cfg = load(common);

  if (serve->parsed()) {
    HttpService server(cfg);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const std::string h = host.value_or(cfg.host);
    const int p = port.value_or(cfg.port);
    const int bound = p == 0 ? server.bind_any(h) : p;
    if (bound < 0) throw IoError("cannot bind " + h);
    if (!port_file.empty()) {
      // Written before listening starts; clients retry until it accepts.
      std::ofstream(port_file) << bound << "\n";
    }
    std::cerr << "listening on " << h << ":" << bound << std::endl;
    const bool ok = p == 0 ? server.listen_after_bind() : server.listen(h, p);
    g_server = nullptr;
    if (!ok && p != 0) throw IoError("cannot listen on " + h + ":" + std::to_string(p));
    return 0;
  }

  if (respond->parsed()) {
    const auto service = ResponseService::from_config(cfg);
    std::cout << service->respond(read_context(context_file), purpose).to_json().dump(2) << "\n";
    return 0;
  }

  for (const auto& [name, stage] : stage_of) {
    if (!app.got_subcommand(name)) continue;
    StageArgs args;
    review.verdict = verdict_from_string(verdict);
    if (!ids_file.empty()) {
      std::ifstream in(ids_file);
      if (!in) throw IoError("cannot read " + ids_file);
      for (std::string line; std::getline(in, line);)
        if (!line.empty()) review.ids.push_back(line);
    }
    args.review = review;
    std::cout << run_stage(stage, cfg, args).dump(2) << "\n";
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 1;
  }
}
