#pragma once

// Word-level vocabulary and hybrid prompt assembly. Prompts interleave
// ordinary vocabulary tokens with modality-token placeholders whose
// embeddings are supplied by the adaptors at embedding time; the three task
// levels differ only in which placeholders appear.

#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "trifuse/data.hpp"
#include "trifuse/tensor.hpp"

namespace trifuse {

namespace special {
constexpr int kBos = 0;
constexpr int kEos = 1;
constexpr int kPad = 2;
constexpr int kMtItem = 3;
constexpr int kMtBeh = 4;
constexpr int kCount = 5;
}  // namespace special

struct Vocab {
  std::vector<std::string> words;
  std::unordered_map<std::string, int> ids;

  static Vocab build(const std::vector<Item>& catalog);
  int id(const std::string& word) const;       // throws LookupError
  const std::string& word(int token) const;    // throws LookupError
  int size() const { return int(words.size()); }
};

// Alnum runs become words; every other non-space character stands alone.
std::vector<std::string> split_words(const std::string& text);
std::vector<int> tokenize(const Vocab& vocab, const std::string& text);
std::string detokenize(const Vocab& vocab, const std::vector<int>& tokens);

enum class PromptLevel { kEasy = 0, kMedium = 1, kHard = 2 };
const char* level_name(PromptLevel level);
PromptLevel level_from_name(const std::string& name);

struct Override {
  enum class Source { kItem, kBehavior };
  int position = 0;  // index into HybridPrompt::tokens
  Source source = Source::kItem;
  int index = 0;  // history position for kItem, behavior id for kBehavior
};

struct HybridPrompt {
  std::vector<int> tokens;  // starts with BOS; with answer: ... name tokens, EOS
  std::vector<Override> overrides;
  PromptLevel level = PromptLevel::kEasy;
  int template_id = 0;
  int answer_start = -1;        // index of the first answer token; tokens.size() when omitted
  std::vector<int> answer_ids;  // the target name's token ids (no EOS)
};

constexpr int kTemplateCount = 3;

HybridPrompt render_prompt(const Vocab& vocab, const std::vector<Item>& catalog,
                           const UserSequence& seq, PromptLevel level, long template_seed,
                           bool include_answer);

nlohmann::json prompt_to_json(const HybridPrompt& prompt);

// Embedding lookup with adaptor outputs patched over the MT positions.
// item_tokens: per-history-position adaptor outputs (H x d_llm); behavior_tokens: 3 x d_llm.
// Either may be null when the level does not use it.
TensorPtr embed_prompt(Tape& tape, const HybridPrompt& prompt, const TensorPtr& token_table,
                       const TensorPtr& item_tokens, const TensorPtr& behavior_tokens);

}  // namespace trifuse
