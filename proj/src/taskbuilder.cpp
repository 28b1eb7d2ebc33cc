#include "docdial/taskbuilder.hpp"

#include <algorithm>

#include "docdial/utf8.hpp"

namespace docdial {

const char* task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::Main: return "main";
    case TaskKind::GroundingOnly: return "grounding_only";
    case TaskKind::AgentOnly: return "agent_only";
  }
  return "?";
}

const char* prompt_style_name(PromptStyle style) {
  return style == PromptStyle::Connected ? "connected" : "independent";
}

PromptStyle prompt_style_from_name(const std::string& name) {
  if (name == "connected") return PromptStyle::Connected;
  if (name == "independent") return PromptStyle::Independent;
  throw ParseError("unknown prompt style '" + name + "'");
}

std::string prompt_string(TaskKind kind, PromptStyle style) {
  if (style == PromptStyle::Connected) {
    switch (kind) {
      case TaskKind::Main: return "generate <grounding> then <agent> :";
      case TaskKind::GroundingOnly: return "generate <grounding> :";
      case TaskKind::AgentOnly: return "generate <agent> :";
    }
  }
  switch (kind) {
    case TaskKind::Main: return "<Task1> :";
    case TaskKind::GroundingOnly: return "<Task2> :";
    case TaskKind::AgentOnly: return "<Task3> :";
  }
  return {};
}

namespace {

void require_agent_turn(const Dialogue& dialogue, int turn_index) {
  if (turn_index < 1 || turn_index >= static_cast<int>(dialogue.turns.size()) ||
      dialogue.turns[turn_index].role != Role::Agent) {
    throw ValidationError("dialogue '" + dialogue.dial_id + "': turn " +
                          std::to_string(turn_index) + " is not an agent turn");
  }
}

}  // namespace

std::string serialize_context(const Dialogue& dialogue, int turn_index) {
  require_agent_turn(dialogue, turn_index);
  std::string out;
  for (int i = 0; i < turn_index; ++i) {
    const Turn& t = dialogue.turns[i];
    if (!out.empty()) out += ' ';
    out += (t.role == Role::User) ? "<user> " : "<agent> ";
    out += t.utterance;
  }
  return out;
}

std::string serialize_document(const Document& doc) {
  std::string out = "<title> " + doc.title + " </title>";
  if (!doc.text.empty()) {
    out += ' ';
    out += doc.text;
  }
  return out;
}

namespace {

std::string target_string(TaskKind kind, const std::string& grounding_text,
                          const std::string& response_text) {
  switch (kind) {
    case TaskKind::Main: return "<grounding> " + grounding_text + " <agent> " + response_text;
    case TaskKind::GroundingOnly: return "<grounding> " + grounding_text;
    case TaskKind::AgentOnly: return "<agent> " + response_text;
  }
  return {};
}

}  // namespace

TaskInstance build_instance(const Dialogue& dialogue, int turn_index, const Document& doc,
                            TaskKind kind, PromptStyle style, const Vocabulary& vocab,
                            int max_input_len) {
  require_agent_turn(dialogue, turn_index);
  const Turn& turn = dialogue.turns[turn_index];
  if (!turn.grounding) {
    throw ValidationError("dialogue '" + dialogue.dial_id + "': agent turn " +
                          std::to_string(turn_index) + " has no grounding annotation");
  }
  const std::string prompt = prompt_string(kind, style);
  const int prompt_len = static_cast<int>(encode(vocab, prompt).size());
  if (max_input_len < prompt_len + 8) {
    throw std::invalid_argument("max_input_len " + std::to_string(max_input_len) +
                                " too small (need prompt length + 8 = " +
                                std::to_string(prompt_len + 8) + ")");
  }

  TaskInstance inst;
  inst.kind = kind;
  inst.dial_id = dialogue.dial_id;
  inst.turn_index = turn_index;

  const std::string input =
      prompt + ' ' + serialize_context(dialogue, turn_index) + ' ' + serialize_document(doc);
  inst.input_ids = encode(vocab, input);
  if (static_cast<int>(inst.input_ids.size()) > max_input_len) {
    inst.input_ids.resize(max_input_len);
  }

  const std::string grounding_text =
      utf8_slice(doc.text, turn.grounding->begin, turn.grounding->end);
  inst.target_ids = encode(vocab, target_string(kind, grounding_text, turn.utterance));
  inst.target_ids.push_back(Vocabulary::kEos);
  return inst;
}

std::vector<TaskInstance> build_training_set(const Corpus& corpus, PromptStyle style,
                                             bool enable_aux, const Vocabulary& vocab,
                                             int max_input_len) {
  std::vector<TaskInstance> out;
  for (const Dialogue& d : corpus.dialogues) {
    const Document& doc = corpus.document_for(d);
    for (int i = 0; i < static_cast<int>(d.turns.size()); ++i) {
      if (d.turns[i].role != Role::Agent) continue;
      out.push_back(build_instance(d, i, doc, TaskKind::Main, style, vocab, max_input_len));
      if (enable_aux) {
        out.push_back(
            build_instance(d, i, doc, TaskKind::GroundingOnly, style, vocab, max_input_len));
        out.push_back(build_instance(d, i, doc, TaskKind::AgentOnly, style, vocab, max_input_len));
      }
    }
  }
  return out;
}

const char* output_parse_error_name(OutputParseError e) {
  switch (e) {
    case OutputParseError::None: return "none";
    case OutputParseError::MissingGroundingMarker: return "missing_grounding_marker";
    case OutputParseError::MissingAgentMarker: return "missing_agent_marker";
    case OutputParseError::MarkersOutOfOrder: return "markers_out_of_order";
  }
  return "?";
}

ParseResult parse_output(const TokenSeq& generated, const Vocabulary& vocab) {
  ParseResult res;
  const auto g = std::find(generated.begin(), generated.end(), Vocabulary::kGrounding);
  if (g == generated.end()) {
    res.error = OutputParseError::MissingGroundingMarker;
    return res;
  }
  const auto a = std::find(generated.begin(), generated.end(), Vocabulary::kAgent);
  if (a < g) {
    res.error = OutputParseError::MarkersOutOfOrder;
    return res;
  }
  const auto a_after = std::find(g + 1, generated.end(), Vocabulary::kAgent);
  if (a_after == generated.end()) {
    res.error = OutputParseError::MissingAgentMarker;
    return res;
  }
  res.output.grounding_text = decode(vocab, TokenSeq(g + 1, a_after));
  res.output.response_text = decode(vocab, TokenSeq(a_after + 1, generated.end()));
  return res;
}

std::pair<int, int> input_grounding_token_span(const Dialogue& dialogue, int turn_index,
                                               const Document& doc, TaskKind kind,
                                               PromptStyle style, const Vocabulary& vocab,
                                               int max_input_len) {
  require_agent_turn(dialogue, turn_index);
  const Turn& turn = dialogue.turns[turn_index];
  if (!turn.grounding) {
    throw ValidationError("dialogue '" + dialogue.dial_id + "': agent turn " +
                          std::to_string(turn_index) + " has no grounding annotation");
  }
  const std::string head = prompt_string(kind, style) + ' ' +
                           serialize_context(dialogue, turn_index) + ' ' + "<title> " +
                           doc.title + " </title>";
  const std::string text_before = utf8_slice(doc.text, 0, turn.grounding->begin);
  const std::string span_text = utf8_slice(doc.text, turn.grounding->begin, turn.grounding->end);

  const int begin = static_cast<int>(encode(vocab, head).size()) +
                    static_cast<int>(encode(vocab, text_before).size());
  const int end = begin + static_cast<int>(encode(vocab, span_text).size());
  return {std::min(begin, max_input_len), std::min(end, max_input_len)};
}

}  // namespace docdial
