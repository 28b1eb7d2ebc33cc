#pragma once

#include <string>
#include <vector>

#include "docdial/corpus.hpp"
#include "docdial/tokenizer.hpp"

namespace docdial {

// Main generates "<grounding> k_t <agent> a_t"; the auxiliary kinds generate
// one part each.
enum class TaskKind { Main, GroundingOnly, AgentOnly };

// Connected prompts share the scaffold word "generate" and the part markers
// across tasks; independent prompts use one disjoint <TaskN> token each.
enum class PromptStyle { Connected, Independent };

const char* task_kind_name(TaskKind kind);
const char* prompt_style_name(PromptStyle style);
PromptStyle prompt_style_from_name(const std::string& name);  // throws ParseError

std::string prompt_string(TaskKind kind, PromptStyle style);

struct TaskInstance {
  TaskKind kind = TaskKind::Main;
  TokenSeq input_ids;   // prompt ++ serialized context ++ serialized document
  TokenSeq target_ids;  // ends with EOS
  std::string dial_id;
  int turn_index = 0;
};

struct ParsedOutput {
  std::string grounding_text;
  std::string response_text;
};

enum class OutputParseError { None, MissingGroundingMarker, MissingAgentMarker, MarkersOutOfOrder };

const char* output_parse_error_name(OutputParseError e);

struct ParseResult {
  ParsedOutput output;
  OutputParseError error = OutputParseError::None;
  bool ok() const { return error == OutputParseError::None; }
};

// All turns strictly before turn_index, each prefixed by its role marker.
// turn_index must name an agent turn with index >= 1.
std::string serialize_context(const Dialogue& dialogue, int turn_index);

// "<title> {title} </title> {text}"; no trailing space when text is empty.
std::string serialize_document(const Document& doc);

// Encoded input is truncated from the right to max_input_len, so the document
// tail goes first and the prompt always survives.
TaskInstance build_instance(const Dialogue& dialogue, int turn_index, const Document& doc,
                            TaskKind kind, PromptStyle style, const Vocabulary& vocab,
                            int max_input_len);

// One Main instance per agent turn, plus one GroundingOnly and one AgentOnly
// when enable_aux is set; per-turn kinds are interleaved in that order.
std::vector<TaskInstance> build_training_set(const Corpus& corpus, PromptStyle style,
                                             bool enable_aux, const Vocabulary& vocab,
                                             int max_input_len);

// Splits a generated Main-task sequence at the first <agent> marker after the
// first <grounding>. Marker violations are reported, never thrown: callers
// score such outputs as empty predictions.
ParseResult parse_output(const TokenSeq& generated, const Vocabulary& vocab);

// Token index range [begin, end) of the grounding span inside the instance's
// input_ids, clipped by truncation (possibly empty). Exact when the grounding
// span is aligned to whitespace boundaries, as synthesized corpora guarantee;
// used by the attention diagnostics.
std::pair<int, int> input_grounding_token_span(const Dialogue& dialogue, int turn_index,
                                               const Document& doc, TaskKind kind,
                                               PromptStyle style, const Vocabulary& vocab,
                                               int max_input_len);

}  // namespace docdial
