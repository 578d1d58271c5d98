// One PASS/FAIL line per criterion; exit status is the number of failures.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "oracles.hpp"
#include "respsel/clustering.hpp"
#include "respsel/config.hpp"
#include "respsel/errors.hpp"
#include "respsel/ranking.hpp"
#include "respsel/recall.hpp"
#include "respsel/synthetic.hpp"
#include "support.hpp"

using namespace respsel;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Checker {
  Outcome out;
  void expect(bool ok, const std::string& what) {
    if (!ok && out.pass) out.detail = "first failure: " + what;
    out.pass = out.pass && ok;
  }
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << std::fixed << v;
  return s.str();
}

// ---------------------------------------------------------------- 1

Outcome metric_oracles() {
  Checker c;
  const std::vector<EmbeddingVector> xs{EmbeddingVector({0, 0}), EmbeddingVector({0, 2}), EmbeddingVector({10, 0}),
                                        EmbeddingVector({10, 2})};
  const auto cl = Clustering::from_assignments(xs, {0, 0, 1, 1}, 2);
  const double intra = intra_distance(cl, xs), inter = inter_distance(cl, xs);
  c.expect(near(intra, 1.0, 1e-8), "intra " + fmt(intra, 10));
  c.expect(near(inter, std::sqrt(101.0), 1e-8) && near(inter, 10.04987562, 1e-8), "inter " + fmt(inter, 10));

  const std::vector<std::string> one{"aab"}, two{"ab", "ab"}, words{"the cat the cat sat"};
  c.expect(distinct_n(one, 1) == 2.0 / 3.0, "distinct-1 aab");
  c.expect(distinct_n(one, 2) == 1.0, "distinct-2 aab");
  c.expect(distinct_n(two, 1) == 0.5, "distinct-1 ab,ab");
  c.expect(distinct_n(two, 2) == 0.5, "distinct-2 ab,ab");
  c.expect(distinct_n(words, 1, Tokenizer::whitespace) == 3.0 / 5.0, "distinct-1 words");
  c.expect(distinct_n(words, 2, Tokenizer::whitespace) == 3.0 / 4.0, "distinct-2 words");

  const double k = fleiss_kappa({{3, 0}, {2, 1}});
  c.expect(near(k, -0.2, 1e-12), "kappa " + fmt(k, 14));
  c.expect(near(fleiss_kappa({{4, 0, 0}, {0, 4, 0}, {0, 0, 4}, {4, 0, 0}}), 1.0, 1e-12), "perfect agreement");
  c.out.detail = c.out.pass ? "intra " + fmt(intra, 8) + ", inter " + fmt(inter, 8) + ", kappa " + fmt(k, 12)
                            : c.out.detail;
  return c.out;
}

// ---------------------------------------------------------------- 2

Outcome gradient_check() {
  Checker c;
  std::mt19937_64 rng(20261014);
  // With a 1-wide side every cosine is +-1 and the loss is flat.
  std::uniform_int_distribution<std::size_t> dim(2, 16), neg(1, 8), items(1, 6);
  std::uniform_real_distribution<double> tau(0.2, 2.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t d_in = dim(rng), d_out = dim(rng);
    const auto batch = oracles::random_batch(rng, items(rng), d_in, neg(rng));
    const auto head = oracles::random_head(rng, d_in, d_out, tau(rng));
    const double err = oracles::gradient_relative_error(batch, head);
    worst = std::max(worst, err);
    c.expect(err <= 1e-4, "batch " + std::to_string(t) + " (" + std::to_string(d_out) + "x" + std::to_string(d_in) +
                             ") rel err " + std::to_string(err));
  }
  if (c.out.pass) {
    std::ostringstream w;
    w << std::scientific << std::setprecision(2) << worst;
    c.out.detail = "100 batches, worst relative error " + w.str();
  }
  return c.out;
}

// ---------------------------------------------------------------- 3

Outcome planted_clusters() {
  Checker c;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 2 + t % 3, d = 2 + t % 4, per = 10 + t % 11;
    const double radius = 1.0, sep = 5.0 * radius;
    // Centers by rejection so every pair is at least sep apart.
    std::vector<std::vector<double>> centers;
    while (centers.size() < k) {
      std::vector<double> ctr(d);
      for (auto& v : ctr) v = unit(rng) * 12.0 * static_cast<double>(k);
      bool ok = true;
      for (const auto& o : centers) {
        double s = 0;
        for (std::size_t i = 0; i < d; ++i) s += (ctr[i] - o[i]) * (ctr[i] - o[i]);
        ok = ok && std::sqrt(s) >= sep;
      }
      if (ok) centers.push_back(ctr);
    }
    std::vector<EmbeddingVector> xs;
    std::vector<std::size_t> truth;
    for (std::size_t g = 0; g < k; ++g)
      for (std::size_t m = 0; m < per; ++m) {
        std::vector<double> dir(d);
        double norm = 0;
        for (auto& v : dir) norm += (v = gauss(rng)) * v;
        norm = std::sqrt(norm);
        const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(d));
        std::vector<double> p(d);
        for (std::size_t i = 0; i < d; ++i) p[i] = centers[g][i] + r * dir[i] / norm;
        xs.emplace_back(std::move(p));
        truth.push_back(g);
      }
    KMeansOptions o;
    o.k = k;
    o.seed = static_cast<std::uint64_t>(t);
    const auto got = kmeans(xs, o);
    std::map<std::size_t, std::size_t> to_truth;
    bool same = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto [it, fresh] = to_truth.emplace(got.assignments[i], truth[i]);
      same = same && it->second == truth[i];
    }
    same = same && to_truth.size() == k;
    c.expect(same, "dataset " + std::to_string(t) + " partition differs");
    const double intra = intra_distance(got, xs), inter = inter_distance(got, xs);
    c.expect(intra < inter, "dataset " + std::to_string(t) + " intra >= inter");
  }
  if (c.out.pass) c.out.detail = "50/50 partitions recovered, intra < inter in all";
  return c.out;
}

// ---------------------------------------------------------------- 4

Outcome recall_lift() {
  Checker c;
  const MockEmbedder e(256, 21);
  synthetic::PlantedOptions po;
  po.pairs = 2400;
  const auto pairs = synthetic::planted_pairs(po, e, kContextSeparator);
  const auto split = split_dataset(pairs, {8, 1, 1}, 3);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.lr = 2.0;
  cfg.batch_size = 32;
  cfg.n_neg = 9;
  cfg.temperature = 0.1;
  cfg.seed = 5;
  const auto trained = train_head(split.train, e, cfg, split.val);
  const std::vector<std::size_t> ks{1, 5, 10};
  const auto r_trained = eval_recall_at_k(trained.head, e, split.test, ks, 10, 11);
  const auto r_identity = eval_recall_at_k(ProjectionHead::identity(256), e, split.test, ks, 10, 11);
  c.expect(pairs.size() >= 2000, "corpus too small");
  c.expect(r_trained.at(1) >= 0.9, "trained R@1 " + fmt(r_trained.at(1)));
  c.expect(r_identity.at(1) <= 0.2, "identity R@1 " + fmt(r_identity.at(1)));
  c.out.detail = (c.out.pass ? std::string() : c.out.detail + "; ") + "trained R@1 " + fmt(r_trained.at(1)) +
                 " vs identity " + fmt(r_identity.at(1)) + " on " + std::to_string(split.test.size()) +
                 " test cases, best epoch " + std::to_string(trained.best_epoch);
  return c.out;
}

// ---------------------------------------------------------------- 5

Outcome recall_protocol() {
  Checker c;
  const std::size_t n = 4000;
  std::vector<ContextResponse> cases(n);
  for (std::size_t i = 0; i < n; ++i) {
    cases[i].dialogue_id = "q" + std::to_string(i);
    for (auto& u : cases[i].context) u = testing::debtor("ctx " + std::to_string(i));
    cases[i].response = testing::collector("resp " + std::to_string(i));
  }
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CandidateScorer random = [&](const ContextResponse&, std::span<const std::size_t> cands) {
    std::vector<double> s(cands.size());
    for (auto& v : s) v = u(rng);
    return s;
  };
  const std::vector<std::size_t> ks{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto r = eval_recall_at_k(cases, random, ks, 10, 99);
  const double s1 = std::sqrt(0.1 * 0.9 / n), s5 = std::sqrt(0.5 * 0.5 / n);
  c.expect(std::abs(r.at(1) - 0.1) <= 3 * s1, "R@1 " + fmt(r.at(1)));
  c.expect(std::abs(r.at(5) - 0.5) <= 3 * s5, "R@5 " + fmt(r.at(5)));
  for (std::size_t k = 2; k <= 10; ++k) c.expect(r.at(k) >= r.at(k - 1), "R@k not monotone at " + std::to_string(k));
  c.expect(r.at(10) == 1.0, "R@10 " + fmt(r.at(10)));
  c.out.detail = (c.out.pass ? std::string() : c.out.detail + "; ") + "R@1 " + fmt(r.at(1)) + ", R@5 " +
                 fmt(r.at(5)) + ", R@10 " + fmt(r.at(10)) + " over " + std::to_string(n) + " cases";
  return c.out;
}

// ---------------------------------------------------------------- 6

Outcome ranking_tie_break() {
  Checker c;
  // The scorer reads "s:e,p,c" planted at the end of each candidate text.
  const FunctionScorer scripted([](const std::string& prompt) {
    const auto at = prompt.rfind("s:");
    return json{{"empathetic_engagement", prompt[at + 2] - '0'},
                {"effective_problem_solving", prompt[at + 4] - '0'},
                {"contextual_relevance", prompt[at + 6] - '0'}}
        .dump();
  });
  const Rubric rubric = Rubric::standard();
  const std::vector<Utterance> ctx{testing::collector("hello"), testing::debtor("I cannot pay this month")};
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> level(2, 3), size(2, 5);
  std::size_t ties = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = t % 2 ? 3 : size(rng);
    std::vector<Candidate> cands;
    std::vector<double> overall;
    for (int i = 0; i < n; ++i) {
      const int e = level(rng), p = level(rng), q = level(rng);
      cands.push_back({"c" + std::to_string(i), "script " + std::to_string(i) + " s:" + std::to_string(e) + "," +
                                                     std::to_string(p) + "," + std::to_string(q),
                       static_cast<std::size_t>(i + 1)});
      overall.push_back((e + p + q) / 3.0);
    }
    // Expected: max overall, then the lowest recall rank among the maxima.
    const double best = *std::max_element(overall.begin(), overall.end());
    std::size_t expect_rank = 0, at_max = 0;
    for (int i = 0; i < n; ++i)
      if (overall[i] == best) {
        ++at_max;
        if (!expect_rank) expect_rank = static_cast<std::size_t>(i + 1);
      }
    ties += at_max > 1;

    const auto base = rank_candidates(ctx, cands, scripted, rubric);
    c.expect(base.best.recall_rank == expect_rank, "case " + std::to_string(t) + " tie went to rank " +
                                                       std::to_string(base.best.recall_rank));
    for (std::size_t i = 1; i < base.ordering.size(); ++i) {
      const auto& a = base.ordering[i - 1];
      const auto& b = base.ordering[i];
      c.expect(a.overall > b.overall || (a.overall == b.overall && a.recall_rank < b.recall_rank),
               "case " + std::to_string(t) + " ordering");
    }
    std::vector<std::string> base_ids;
    for (const auto& s : base.ordering) base_ids.push_back(s.script_id);
    for (int perm = 0; perm < 3; ++perm) {
      auto shuffled = cands;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto r = rank_candidates(ctx, shuffled, scripted, rubric);
      std::vector<std::string> ids;
      for (const auto& s : r.ordering) ids.push_back(s.script_id);
      c.expect(ids == base_ids, "case " + std::to_string(t) + " not permutation invariant");
    }
  }
  if (c.out.pass) c.out.detail = "1000 cases, " + std::to_string(ties) + " with tied best; 3 permutations each";
  return c.out;
}

// ---------------------------------------------------------------- 7

int run(const std::vector<std::string>& args, const fs::path& log) {
  const pid_t pid = fork();
  if (pid == 0) {
    std::FILE* f = std::fopen(log.c_str(), "a");
    if (f) {
      dup2(fileno(f), 1);
      dup2(fileno(f), 2);
    }
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execv(argv[0], argv.data());
    _exit(127);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
}

pid_t spawn(const std::vector<std::string>& args, const fs::path& log) {
  const pid_t pid = fork();
  if (pid == 0) {
    std::FILE* f = std::fopen(log.c_str(), "a");
    if (f) {
      dup2(fileno(f), 1);
      dup2(fileno(f), 2);
    }
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execv(argv[0], argv.data());
    _exit(127);
  }
  return pid;
}

// Waits for the port file and a healthy /healthz; -1 on timeout.
int await_server(const fs::path& port_file, pid_t pid) {
  for (int i = 0; i < 600; ++i) {
    int status = 0;
    if (waitpid(pid, &status, WNOHANG) == pid) return -1;
    std::ifstream in(port_file);
    int port = 0;
    if (in >> port && port > 0) {
      httplib::Client cli("127.0.0.1", port);
      if (auto r = cli.Get("/healthz"); r && r->status == 200) return port;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  return -1;
}

void stop(pid_t pid) {
  kill(pid, SIGTERM);
  int status = 0;
  for (int i = 0; i < 100; ++i) {
    if (waitpid(pid, &status, WNOHANG) == pid) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  kill(pid, SIGKILL);
  waitpid(pid, &status, 0);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Same config with the scorer pointed at an endpoint nothing listens on.
void write_dead_scorer_config(const fs::path& from, const fs::path& to, int dead_port) {
  std::istringstream in(slurp(from));
  std::ofstream out(to);
  std::string section;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] == '[') section = line;
    if (section == "[scorer]" && line.rfind("kind", 0) == 0) {
      out << "kind = remote\nendpoint = http://127.0.0.1:" << dead_port << "\nmax_attempts = 1\n";
      continue;
    }
    out << line << "\n";
  }
}

Outcome end_to_end() {
  Checker c;
  testing::TempDir tmp;
  const fs::path bundle = tmp / "bundle", work = tmp / "work", log = tmp / "cli.log";
  fs::copy(RESPSEL_DATA_DIR, bundle, fs::copy_options::recursive);
  const std::string cli = RESPSEL_CLI, config = (bundle / "config.ini").string();
  const auto stage = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{cli, "--config", config, "--work-dir", work.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args, log);
  };

  for (const char* s : {"ingest", "segment", "cluster", "seeds", "generate"})
    c.expect(stage({s}) == 0, std::string("stage ") + s + " failed, see log");
  if (!c.out.pass) return c.out;

  // Approve roughly two thirds, reject the rest, so the filter has work to do.
  const json generated = json::parse(slurp(work / "library.json"));
  std::ofstream ids(tmp / "approve.txt");
  std::size_t i = 0, approved_n = 0;
  for (const auto& s : generated.at("scripts"))
    if (i++ % 3 != 2) {
      ids << s.at("id").get<std::string>() << "\n";
      ++approved_n;
    }
  ids.close();
  c.expect(stage({"review", "--ids-file", (tmp / "approve.txt").string(), "--verdict", "approve", "--at",
                  "2026-01-01T00:00:00Z"}) == 0,
           "approve review failed");
  c.expect(stage({"review", "--all-pending", "--verdict", "reject", "--at", "2026-01-01T00:00:00Z"}) == 0,
           "reject review failed");
  for (const char* s : {"train-recall", "build-index"}) c.expect(stage({s}) == 0, std::string("stage ") + s + " failed");
  if (!c.out.pass) return c.out;

  std::map<std::string, std::pair<std::string, std::string>> status_purpose;
  const json reviewed = json::parse(slurp(work / "library.json"));
  for (const auto& s : reviewed.at("scripts"))
    status_purpose[s.at("id")] = {s.at("review_status"), s.at("purpose")};

  const fs::path port_file = tmp / "port";
  const pid_t server = spawn({cli, "--config", config, "--work-dir", work.string(), "serve", "--port", "0",
                              "--port-file", port_file.string()},
                             log);
  const int port = await_server(port_file, server);
  c.expect(port > 0, "server did not come up");
  if (!c.out.pass) {
    stop(server);
    return c.out;
  }

  const auto& purposes = synthetic::purposes();
  const std::vector<std::string> vocab{"pay",   "job",   "money", "card",  "bank",  "late", "time", "week",
                                       "month", "sorry", "lost",  "amount", "wrong", "plan", "help", "salary",
                                       "fee",   "why",   "today", "forgot", "xqz",  "??",   "42",   "ok"};
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1), len(1, 12), turns(1, 8),
      pick(0, purposes.size() - 1);
  httplib::Client http("127.0.0.1", port);
  std::size_t ok = 0;
  for (int r = 0; r < 1000; ++r) {
    json ctx = json::array();
    const std::size_t n = turns(rng);
    for (std::size_t t = 0; t < n; ++t) {
      std::string text;
      for (std::size_t w = len(rng); w > 0; --w) text += vocab[word(rng)] + (w > 1 ? " " : "");
      ctx.push_back({{"speaker", t % 2 == 0 ? "collector" : "debtor"}, {"text", text}});
    }
    const std::string purpose = purposes[pick(rng)];
    const auto res = http.Post("/respond", json{{"context", ctx}, {"purpose", purpose}}.dump(), "application/json");
    if (!res || res->status != 200) {
      c.expect(false, "request " + std::to_string(r) + " status " + (res ? std::to_string(res->status) : "none"));
      continue;
    }
    const json body = json::parse(res->body);
    const auto it = status_purpose.find(body.at("script_id").get<std::string>());
    const bool good = it != status_purpose.end() && it->second.first == "approved" && it->second.second == purpose &&
                      body.at("purpose") == purpose && body.at("degraded") == false;
    c.expect(good, "request " + std::to_string(r) + " served a non-matching script");
    ok += good;
  }
  stop(server);

  // Fallback: scorer endpoint is dead.
  const int dead_port = testing::unused_port();
  const fs::path dead_cfg = bundle / "config.dead.ini";
  write_dead_scorer_config(config, dead_cfg, dead_port);
  const fs::path port_file2 = tmp / "port2";
  const pid_t degraded_server = spawn({cli, "--config", dead_cfg.string(), "--work-dir", work.string(), "serve",
                                       "--port", "0", "--port-file", port_file2.string()},
                                      log);
  const int port2 = await_server(port_file2, degraded_server);
  c.expect(port2 > 0, "degraded server did not come up");
  std::size_t degraded_ok = 0;
  if (port2 > 0) {
    auto cfg = load_config(config);
    const auto embedder = make_embedder(cfg.recall_embedder);
    const auto index = RecallIndex::from_json(json::parse(slurp(work / "index.json")));
    httplib::Client http2("127.0.0.1", port2);
    for (int r = 0; r < 20; ++r) {
      const std::string purpose = purposes[static_cast<std::size_t>(r) % purposes.size()];
      std::vector<Utterance> ctx{testing::collector("hello " + vocab[word(rng)]),
                                 testing::debtor(vocab[word(rng)] + " " + vocab[word(rng)] + " " + vocab[word(rng)])};
      json jctx = json::array();
      for (const auto& u : ctx) jctx.push_back(to_json(u));
      const auto res = http2.Post("/respond", json{{"context", jctx}, {"purpose", purpose}}.dump(), "application/json");
      if (!res || res->status != 200) {
        c.expect(false, "degraded request status " + (res ? std::to_string(res->status) : std::string("none")));
        continue;
      }
      const json body = json::parse(res->body);
      const auto first = recall_top_n(index, *embedder, ctx, purpose, cfg.n_recall).front();
      const bool good = body.at("degraded") == true && body.at("recall_rank") == 1 &&
                        body.at("script_id") == first.script_id;
      c.expect(good, "degraded reply is not recall rank 1");
      degraded_ok += good;
    }
  }
  stop(degraded_server);
  c.out.detail = (c.out.pass ? std::string() : c.out.detail + "; ") + std::to_string(ok) +
                 "/1000 replies approved and purpose-matched (" + std::to_string(approved_n) + " of " +
                 std::to_string(status_purpose.size()) + " scripts approved), " + std::to_string(degraded_ok) +
                 "/20 degraded replies equal recall rank 1";
  return c.out;
}

// ---------------------------------------------------------------- 8

Outcome distillation_export() {
  Checker c;
  const auto labeled = synthetic::expert_cases(34, 5);
  std::vector<DistillCase> cases;
  for (const auto& l : labeled)
    for (const auto& cand : l.candidates)
      if (cases.size() < 100) cases.push_back({l.context, cand});
  std::ostringstream sink;
  const auto st = export_distillation(cases, MockScorer(), Rubric::standard(), sink);
  c.expect(cases.size() == 100, "case count");
  c.expect(st.written == 100 && st.dropped == 0, "written " + std::to_string(st.written));
  std::istringstream in(sink.str());
  std::size_t lines = 0;
  const std::set<std::string> want{"instruction", "input", "output"};
  for (std::string line; std::getline(in, line); ++lines) {
    const json rec = json::parse(line);
    std::set<std::string> keys;
    for (const auto& [k, v] : rec.items()) keys.insert(k);
    c.expect(keys == want, "record " + std::to_string(lines) + " fields");
    c.expect(rec.at("instruction").is_string() && rec.at("input").is_string() && rec.at("output").is_string(),
             "record " + std::to_string(lines) + " types");
    try {
      const auto s = parse_scores(rec.at("output").get<std::string>());
      c.expect(s.to_json().dump() == rec.at("output").get<std::string>(), "output does not round-trip");
    } catch (const Error& e) {
      c.expect(false, std::string("parse_scores: ") + e.what());
    }
  }
  c.expect(lines == 100, "line count " + std::to_string(lines));
  if (c.out.pass) c.out.detail = "100 records, all outputs round-trip";
  return c.out;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    std::function<Outcome()> fn;
    double limit_s;
  };
  const std::vector<Criterion> all{
      {"metric oracles", metric_oracles, 1.0},
      {"loss gradient vs finite differences", gradient_check, 30.0},
      {"planted clustering recovery", planted_clusters, 30.0},
      {"recall training lift", recall_lift, 300.0},
      {"Recall@K protocol with a random scorer", recall_protocol, 60.0},
      {"ranking permutation invariance and tie-break", ranking_tie_break, 60.0},
      {"end-to-end CLI pipeline and service", end_to_end, 600.0},
      {"distillation export", distillation_export, 60.0},
  };
  int failures = 0;
  std::set<std::size_t> only;
  for (int a = 1; a < argc; ++a) only.insert(std::stoul(argv[a]));
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > all[i].limit_s) {
      o.pass = false;
      o.detail += "; over the " + fmt(all[i].limit_s, 0) + " s budget";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << all[i].name << ": " << o.detail << " ("
              << fmt(secs, 2) << " s)" << std::endl;
  }
  const std::size_t ran = only.empty() ? all.size() : only.size();
  std::cout << (ran - failures) << "/" << ran << " criteria passed" << std::endl;
  return failures;
}
