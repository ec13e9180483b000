#include "trifuse/prompt.hpp"

#include <algorithm>
#include <cctype>

#include "trifuse/errors.hpp"

namespace trifuse {

namespace {

struct Template {
  const char* intro;     // ends right before the first interaction clause
  const char* question;  // asked after the history
};

const Template kTemplates[kTemplateCount] = {
    {"a user shops online . the user", "which item will the user purchase next ?"},
    {"below is a shopping session . the user", "what item does the user purchase next ?"},
    {"given this interaction history , the user", "which product will the user buy next ?"},
};

const char* behavior_verb(Behavior b) {
  switch (b) {
    case Behavior::kView: return "views";
    case Behavior::kCart: return "adds to cart";
    case Behavior::kPurchase: return "purchases";
  }
  throw UsageError("unknown behavior");
}

void push_words(std::vector<std::string>& out, const std::string& text) {
  for (std::string& w : split_words(text)) out.push_back(std::move(w));
}

}  // namespace

std::vector<std::string> split_words(const std::string& text) {
  static const std::string kMarkers[special::kCount] = {"<bos>", "<eos>", "<pad>", "<mt_item>",
                                                        "<mt_beh>"};
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  };
  for (size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    if (ch == '<') {
      for (const std::string& marker : kMarkers) {
        if (text.compare(i, marker.size(), marker) == 0) {
          flush();
          words.push_back(marker);
          i += marker.size() - 1;
          ch = '\0';
          break;
        }
      }
      if (ch == '\0') continue;
    }
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
      continue;
    }
    flush();
    if (!std::isspace(static_cast<unsigned char>(ch))) words.push_back(std::string(1, ch));
  }
  flush();
  return words;
}

Vocab Vocab::build(const std::vector<Item>& catalog) {
  Vocab v;
  auto add = [&v](const std::string& word) {
    if (v.ids.emplace(word, int(v.words.size())).second) v.words.push_back(word);
  };
  add("<bos>");
  add("<eos>");
  add("<pad>");
  add("<mt_item>");
  add("<mt_beh>");

  std::vector<std::string> fixed;
  for (const Template& t : kTemplates) {
    push_words(fixed, t.intro);
    push_words(fixed, t.question);
  }
  push_words(fixed, "candidates : . , Answer :");
  for (int b = 0; b < kBehaviorCount; ++b) push_words(fixed, behavior_verb(Behavior(b)));
  for (const std::string& w : fixed) add(w);

  std::vector<std::string> catalog_words;
  for (const Item& item : catalog) push_words(catalog_words, item.name);
  std::sort(catalog_words.begin(), catalog_words.end());
  catalog_words.erase(std::unique(catalog_words.begin(), catalog_words.end()), catalog_words.end());
  for (const std::string& w : catalog_words) add(w);
  return v;
}

int Vocab::id(const std::string& word) const {
  auto it = ids.find(word);
  if (it == ids.end()) throw LookupError("word not in vocabulary: " + word);
  return it->second;
}

const std::string& Vocab::word(int token) const {
  if (token < 0 || token >= size()) throw LookupError("token id out of range: " + std::to_string(token));
  return words[size_t(token)];
}

std::vector<int> tokenize(const Vocab& vocab, const std::string& text) {
  std::vector<int> out;
  for (const std::string& w : split_words(text)) out.push_back(vocab.id(w));
  return out;
}

std::string detokenize(const Vocab& vocab, const std::vector<int>& tokens) {
  std::string out;
  for (int t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += vocab.word(t);
  }
  return out;
}

const char* level_name(PromptLevel level) {
  switch (level) {
    case PromptLevel::kEasy: return "easy";
    case PromptLevel::kMedium: return "medium";
    case PromptLevel::kHard: return "hard";
  }
  throw UsageError("unknown level");
}

PromptLevel level_from_name(const std::string& name) {
  for (PromptLevel l : {PromptLevel::kEasy, PromptLevel::kMedium, PromptLevel::kHard}) {
    if (name == level_name(l)) return l;
  }
  throw LookupError("unknown level name: " + name);
}

HybridPrompt render_prompt(const Vocab& vocab, const std::vector<Item>& catalog,
                           const UserSequence& seq, PromptLevel level, long template_seed,
                           bool include_answer) {
  if (seq.history.empty()) throw UsageError("cannot render a prompt for an empty history");
  auto item_name = [&](int id) -> const std::string& {
    if (id < 0 || id >= int(catalog.size())) throw LookupError("unknown item id " + std::to_string(id));
    return catalog[size_t(id)].name;
  };

  HybridPrompt p;
  p.level = level;
  p.template_id = int(((template_seed % kTemplateCount) + kTemplateCount) % kTemplateCount);
  const Template& tpl = kTemplates[size_t(p.template_id)];

  auto push_text = [&](const std::string& text) {
    for (const std::string& w : split_words(text)) p.tokens.push_back(vocab.id(w));
  };

  p.tokens.push_back(special::kBos);
  push_text(tpl.intro);
  for (size_t t = 0; t < seq.history.size(); ++t) {
    const Interaction& it = seq.history[t];
    if (t > 0) push_text(",");
    push_text(behavior_verb(it.behavior));
    if (level != PromptLevel::kEasy) {
      p.overrides.push_back({int(p.tokens.size()), Override::Source::kBehavior, int(it.behavior)});
      p.tokens.push_back(special::kMtBeh);
    }
    push_text(item_name(it.item));
    if (level == PromptLevel::kHard) {
      p.overrides.push_back({int(p.tokens.size()), Override::Source::kItem, int(t)});
      p.tokens.push_back(special::kMtItem);
    }
  }
  push_text(".");
  push_text(tpl.question);
  push_text("candidates :");
  for (size_t c = 0; c < seq.candidates.size(); ++c) {
    if (c > 0) push_text(",");
    push_text(item_name(seq.candidates[size_t(c)]));
  }
  push_text(". Answer :");

  p.answer_ids = tokenize(vocab, item_name(seq.target_item));
  p.answer_start = int(p.tokens.size());
  if (include_answer) {
    p.tokens.insert(p.tokens.end(), p.answer_ids.begin(), p.answer_ids.end());
    p.tokens.push_back(special::kEos);
  }
  return p;
}

nlohmann::json prompt_to_json(const HybridPrompt& p) {
  nlohmann::json overrides = nlohmann::json::array();
  for (const Override& o : p.overrides) {
    overrides.push_back({{"position", o.position},
                         {"source", o.source == Override::Source::kItem ? "item" : "behavior"},
                         {"index", o.index}});
  }
  return {{"token_ids", p.tokens},
          {"override_spec", overrides},
          {"level", level_name(p.level)},
          {"template_id", p.template_id},
          {"answer_start", p.answer_start},
          {"answer_ids", p.answer_ids}};
}

TensorPtr embed_prompt(Tape& tape, const HybridPrompt& prompt, const TensorPtr& token_table,
                       const TensorPtr& item_tokens, const TensorPtr& behavior_tokens) {
  std::vector<int> item_positions, behavior_positions;
  std::vector<int> item_rows, behavior_rows;
  for (size_t i = 0; i < prompt.overrides.size(); ++i) {
    const Override& o = prompt.overrides[i];
    if (o.position < 0 || o.position >= int(prompt.tokens.size())) {
      throw IntegrityError("override position outside the prompt");
    }
    int tok = prompt.tokens[size_t(o.position)];
    if (o.source == Override::Source::kItem) {
      if (tok != special::kMtItem) throw IntegrityError("item override must sit on an item placeholder");
      item_positions.push_back(o.position);
      item_rows.push_back(o.index);
    } else {
      if (tok != special::kMtBeh) throw IntegrityError("behavior override must sit on a behavior placeholder");
      behavior_positions.push_back(o.position);
      behavior_rows.push_back(o.index);
    }
  }
  size_t mt_count = 0;
  for (int tok : prompt.tokens) mt_count += tok == special::kMtItem || tok == special::kMtBeh;
  if (mt_count != prompt.overrides.size()) {
    throw IntegrityError("every modality placeholder needs exactly one override");
  }

  TensorPtr embedded = tape.gather_rows(token_table, prompt.tokens);
  if (!item_positions.empty()) {
    if (!item_tokens) throw IntegrityError("prompt has item placeholders but no item token rows");
    TensorPtr patch = tape.gather_rows(item_tokens, item_rows);
    embedded = tape.overlay_rows(embedded, patch, item_positions);
  }
  if (!behavior_positions.empty()) {
    if (!behavior_tokens) throw IntegrityError("prompt has behavior placeholders but no behavior token rows");
    TensorPtr patch = tape.gather_rows(behavior_tokens, behavior_rows);
    embedded = tape.overlay_rows(embedded, patch, behavior_positions);
  }
  return embedded;
}

}  // namespace trifuse
