#include "respsel/synthetic.hpp"

#include <fstream>
#include <map>
#include <random>
#include <set>

#include "respsel/errors.hpp"
#include "respsel/text.hpp"

namespace respsel::synthetic {

using nlohmann::json;

const std::vector<std::string>& strategies() {
  static const std::vector<std::string> s = {"Pressure Through Letters", "Card Suspension",      "Full Payment",
                                             "Negotiation Plan",         "Cash Advance",         "Pressure Through Family",
                                             "Credit Report",            "Repayment Ability",    "Anti-Disconnection"};
  return s;
}

const std::vector<std::string>& purposes() {
  static const std::vector<std::string> p = {"Inability to repay", "Unemployment", "Forgot to pay",
                                             "Dispute the amount", "Request more time"};
  return p;
}

std::vector<PurposeGuideline> guidelines() {
  return {
      {"Inability to repay", "Acknowledge the hardship first, then steer toward the smallest payment the debtor can make."},
      {"Unemployment", "Show empathy for the job loss before explaining the collection strategy and any relief options."},
      {"Forgot to pay", "Stay friendly, remind the debtor of the due date and ask for payment today."},
      {"Dispute the amount", "Stay calm, offer to verify the statement and explain how the balance was computed."},
      {"Request more time", "Agree on a concrete new date and make the consequences of missing it clear."},
  };
}

namespace {

const std::map<std::string, std::vector<std::string>>& collector_templates() {
  static const std::map<std::string, std::vector<std::string>> t = {
      {"Pressure Through Letters",
       {"We will send a formal collection letter to your home address on {day}.",
        "If the {amount} stays unpaid, a legal notice letter goes out to you by {day}.",
        "Our department mails a final demand letter when an account is overdue like yours.",
        "You may receive a letter from our legal team about the overdue {amount}."}},
      {"Card Suspension",
       {"Your card will be suspended on {day} if the {amount} is not paid.",
        "The card is already frozen and stays locked until the overdue balance is cleared.",
        "Once suspended, the card cannot be used for any purchase or cash withdrawal.",
        "To keep your card active you need to pay the {amount} before {day}."}},
      {"Full Payment",
       {"The full overdue amount of {amount} has to be paid by {day}.",
        "Please settle the whole {amount} in one payment to close this case.",
        "We can only stop collection calls once the balance is paid in full.",
        "Paying the entire {amount} today removes all late fees going forward."}},
      {"Negotiation Plan",
       {"We can split the {amount} into installments over the next six months.",
        "If you pay part of it by {day}, I can arrange a repayment plan for the rest.",
        "Let us agree on a monthly installment that fits your budget.",
        "I can apply for a reduced payment plan if you commit to the first installment on {day}."}},
      {"Cash Advance",
       {"Could you borrow the {amount} from a relative and repay them later?",
        "Many customers use a cash advance from another account to clear the overdue balance.",
        "Is there any savings or salary advance you could use to pay the {amount}?",
        "A short loan from friends could cover the {amount} until {day}."}},
      {"Pressure Through Family",
       {"If we cannot reach you, we will have to contact your listed emergency contact.",
        "Your family may be informed about the overdue {amount} if this continues.",
        "We would rather solve this with you directly than involve your relatives.",
        "Your spouse is listed on the account, so we may need to call them about the {amount}."}},
      {"Credit Report",
       {"The overdue {amount} will be reported to the credit bureau on {day}.",
        "A late payment record stays on your credit report for five years.",
        "A poor credit record makes future loans and mortgages much harder to get.",
        "Paying the {amount} now keeps your credit report clean."}},
      {"Repayment Ability",
       {"How much could you realistically pay toward the {amount} this month?",
        "What is your current monthly income, so we can find an amount you can manage?",
        "Do you have any income at the moment that could cover a small payment?",
        "Tell me what you can afford by {day} and we will work from there."}},
      {"Anti-Disconnection",
       {"Please do not hang up, this call is about your overdue {amount}.",
        "I only need two minutes of your time to resolve the overdue balance.",
        "Please stay on the line, ending the call will not stop the collection process.",
        "If the call drops we will keep calling until the {amount} is settled."}},
  };
  return t;
}

const std::map<std::string, std::vector<std::string>>& debtor_templates() {
  static const std::map<std::string, std::vector<std::string>> t = {
      {"Inability to repay",
       {"I really cannot pay the {amount} right now, I have no money.",
        "My expenses are too high, there is nothing left to repay the card.",
        "I simply do not have the money, I can barely pay rent.",
        "There is no way I can repay the {amount} this month."}},
      {"Unemployment",
       {"I lost my job last month and have no income.",
        "I am unemployed since the factory closed, I cannot pay.",
        "My company laid me off, I am still looking for work.",
        "Without a job I have no way to pay the {amount}."}},
      {"Forgot to pay",
       {"Oh, I completely forgot the due date, sorry.",
        "I thought the payment was automatic, I forgot about it.",
        "I was travelling and simply forgot to pay the card.",
        "Sorry, the bill slipped my mind, I forgot."}},
      {"Dispute the amount",
       {"That amount is wrong, I never spent {amount}.",
        "I do not recognise these charges on my statement.",
        "The balance includes fees I never agreed to.",
        "I already paid part of it, the {amount} is not correct."}},
      {"Request more time",
       {"Can you give me until {day} to pay?",
        "I need a few more weeks before I can pay the {amount}.",
        "Please wait until my salary arrives on {day}.",
        "Give me more time, I will pay after {day}."}},
  };
  return t;
}

// Strategies a collector tends to use for each debtor purpose.
const std::map<std::string, std::vector<std::string>>& preferred_strategies() {
  static const std::map<std::string, std::vector<std::string>> t = {
      {"Inability to repay", {"Negotiation Plan", "Repayment Ability", "Cash Advance"}},
      {"Unemployment", {"Repayment Ability", "Negotiation Plan", "Pressure Through Family"}},
      {"Forgot to pay", {"Full Payment", "Card Suspension", "Credit Report"}},
      {"Dispute the amount", {"Anti-Disconnection", "Pressure Through Letters", "Credit Report"}},
      {"Request more time", {"Negotiation Plan", "Credit Report", "Card Suspension"}},
  };
  return t;
}

const std::vector<std::string> kAmounts = {"$320", "$870", "$1,150", "$2,400", "$560"};
const std::vector<std::string> kDays = {"Monday", "Friday", "the 15th", "next week", "the end of the month"};
const std::vector<std::string> kGreetings = {
    "Hello, this is the card center calling about your overdue balance.",
    "Good morning, I am calling from the bank about your credit card payment.",
    "Hi, this is the recovery department, your card payment is overdue.",
};

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::string fill(std::string t, std::mt19937_64& rng) {
  for (const auto& [slot, values] : {std::pair{std::string("{amount}"), &kAmounts}, std::pair{std::string("{day}"), &kDays}}) {
    for (auto pos = t.find(slot); pos != std::string::npos; pos = t.find(slot)) t.replace(pos, slot.size(), pick(*values, rng));
  }
  return t;
}

Dialogue make_dialogue(std::size_t index, const CorpusOptions& opts, std::mt19937_64& rng) {
  Dialogue d;
  d.id = "syn-" + std::to_string(index);
  const std::size_t exchanges =
      std::uniform_int_distribution<std::size_t>(opts.min_exchanges, opts.max_exchanges)(rng);
  std::bernoulli_distribution labeled(opts.label_rate), switch_purpose(0.2), preferred(0.75);
  std::string purpose = pick(purposes(), rng);

  d.utterances.push_back({Speaker::collector, pick(kGreetings, rng), std::nullopt, std::nullopt});
  for (std::size_t e = 0; e < exchanges; ++e) {
    if (e > 0 && switch_purpose(rng)) purpose = pick(purposes(), rng);
    Utterance debtor{Speaker::debtor, fill(pick(debtor_templates().at(purpose), rng), rng), std::nullopt, std::nullopt};
    if (labeled(rng)) debtor.purpose = purpose;
    d.utterances.push_back(std::move(debtor));
    if (e + 1 == exchanges) break;  // dialogues end on the debtor
    const std::string strategy =
        preferred(rng) ? pick(preferred_strategies().at(purpose), rng) : pick(strategies(), rng);
    Utterance collector{Speaker::collector, fill(pick(collector_templates().at(strategy), rng), rng), std::nullopt,
                        std::nullopt};
    if (labeled(rng)) collector.strategy = strategy;
    d.utterances.push_back(std::move(collector));
  }
  // Finish with a collector response so the last window has its sixth turn.
  const std::string strategy = pick(preferred_strategies().at(purpose), rng);
  d.utterances.push_back({Speaker::collector, fill(pick(collector_templates().at(strategy), rng), rng), strategy,
                          std::nullopt});
  return d;
}

}  // namespace

std::vector<std::string> corpus_lines(const CorpusOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < opts.dialogues; ++i) lines.push_back(to_json(make_dialogue(i, opts, rng)).dump());
  for (std::size_t b = 0; b < opts.invalid_records; ++b) {
    Dialogue bad = make_dialogue(opts.dialogues + b, opts, rng);
    bad.id = "syn-invalid-" + std::to_string(b);
    // Duplicate a debtor turn so two debtor turns are adjacent.
    bad.utterances.insert(bad.utterances.begin() + 2, bad.utterances[1]);
    const std::size_t at = std::uniform_int_distribution<std::size_t>(0, lines.size())(rng);
    lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at), to_json(bad).dump());
  }
  return lines;
}

std::vector<LabeledCase> expert_cases(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CorpusOptions opts;
  opts.label_rate = 1.0;
  opts.min_exchanges = 3;
  opts.max_exchanges = 4;
  std::vector<LabeledCase> cases;
  for (std::size_t i = 0; i < n; ++i) {
    Dialogue d = make_dialogue(100000 + i, opts, rng);
    d.utterances.pop_back();  // context ends on the debtor
    LabeledCase c;
    c.context = last_turns(d.utterances, 3);
    const std::string purpose = *d.utterances.back().purpose;
    const std::string& last = d.utterances.back().text;

    const std::size_t best_rank = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    for (std::size_t r = 1; r <= 3; ++r) {
      Candidate cand;
      cand.recall_rank = r;
      cand.script_id = "case" + std::to_string(i) + "-cand" + std::to_string(r);
      if (r == best_rank) {
        const std::string& strategy = pick(preferred_strategies().at(purpose), rng);
        cand.text = "I understand, thank you for explaining. You said: " + last + " " +
                    fill(pick(collector_templates().at(strategy), rng), rng);
        c.chosen = cand.script_id;
      } else {
        cand.text = fill(pick(collector_templates().at(pick(strategies(), rng)), rng), rng);
      }
      c.candidates.push_back(std::move(cand));
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

std::vector<std::vector<double>> rater_counts(std::size_t items, int raters, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution agree(0.62);
  std::uniform_int_distribution<int> cat(0, 2);
  std::vector<std::vector<double>> counts;
  for (std::size_t i = 0; i < items; ++i) {
    std::vector<double> row(3, 0.0);
    const int truth = cat(rng);
    for (int r = 0; r < raters; ++r) row[agree(rng) ? truth : cat(rng)] += 1.0;
    counts.push_back(std::move(row));
  }
  return counts;
}

void write_bundle(const std::filesystem::path& dir, const CorpusOptions& opts) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("corpus.jsonl");
    for (const auto& l : corpus_lines(opts)) out << l << '\n';
  }
  {
    auto out = open("labels.json");
    out << json{{"strategies", strategies()}, {"purposes", purposes()}}.dump(2) << '\n';
  }
  {
    auto out = open("guidelines.json");
    json g = json::object();
    for (const auto& pg : guidelines()) g[pg.purpose] = pg.guideline_text;
    out << g.dump(2) << '\n';
  }
  {
    auto out = open("expert_labels.jsonl");
    for (const auto& c : expert_cases(52, opts.seed + 1)) {
      json ctx = json::array();
      for (const auto& u : c.context) ctx.push_back(to_json(u));
      json cands = json::array();
      for (const auto& k : c.candidates)
        cands.push_back({{"script_id", k.script_id}, {"recall_rank", k.recall_rank}, {"text", k.text}});
      out << json{{"context", ctx}, {"candidates", cands}, {"chosen", c.chosen}}.dump() << '\n';
    }
  }
  {
    auto out = open("rater_counts.json");
    out << json{{"categories", {"candidate_1", "candidate_2", "candidate_3"}},
                {"counts", rater_counts(52, 7, opts.seed + 2)}}
               .dump()
        << '\n';
  }
}

std::vector<ContextResponse> planted_pairs(const PlantedOptions& opts, const MockEmbedder& embedder,
                                           const std::string& separator) {
  std::set<std::size_t> used;
  for (const auto& t : tokenize(separator, embedder.tokenizer())) used.insert(embedder.bucket(t));
  if (2 * opts.concepts + opts.fillers + used.size() > embedder.dimension())
    throw ConfigError("embedder dimension too small for collision-free planted tokens");

  std::size_t serial = 0;
  auto fresh = [&](const std::string& prefix) {
    for (;;) {
      std::string tok = prefix + std::to_string(serial++);
      if (used.insert(embedder.bucket(tok)).second) return tok;
    }
  };
  std::vector<std::string> ctx_tok, resp_tok, filler;
  for (std::size_t i = 0; i < opts.concepts; ++i) ctx_tok.push_back(fresh("ka"));
  for (std::size_t i = 0; i < opts.concepts; ++i) resp_tok.push_back(fresh("kb"));
  for (std::size_t i = 0; i < opts.fillers; ++i) filler.push_back(fresh("w"));

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> concept_dist(0, opts.concepts - 1), len(3, 5);
  auto words = [&](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + pick(filler, rng);
    return s;
  };

  std::vector<ContextResponse> out;
  for (std::size_t p = 0; p < opts.pairs; ++p) {
    const std::size_t a = concept_dist(rng);
    std::size_t b = concept_dist(rng);
    while (b == a) b = concept_dist(rng);
    ContextResponse w;
    w.dialogue_id = "planted-" + std::to_string(p);
    for (std::size_t t = 0; t < 5; ++t) {
      const Speaker sp = t % 2 == 0 ? Speaker::debtor : Speaker::collector;
      std::string text = words(len(rng));
      if (t == 4) text += " " + ctx_tok[a] + " " + ctx_tok[b];
      w.context[t] = {sp, text, std::nullopt, std::nullopt};
    }
    w.response = {Speaker::collector, resp_tok[a] + " " + resp_tok[b] + " " + words(3), std::nullopt, std::nullopt};
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace respsel::synthetic
