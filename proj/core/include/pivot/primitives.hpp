#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pivot/types.hpp"
#include "pivot/world.hpp"

namespace pivot::prim {

enum class Kind { CloseTo, Grasp, MoveUp, MoveDown, Release, Rotate, Push, Pull, Open, Close };
enum class Direction { Left, Right, Front, Back };

inline constexpr std::array<Kind, 10> kAllKinds = {
    Kind::CloseTo, Kind::Grasp, Kind::MoveUp, Kind::MoveDown, Kind::Release,
    Kind::Rotate,  Kind::Push,  Kind::Pull,   Kind::Open,     Kind::Close,
};

// Direction is meaningful only for Rotate/Push/Pull.
struct PrimitiveAction {
  Kind kind = Kind::CloseTo;
  std::optional<Direction> direction;
  std::string target;

  bool operator==(const PrimitiveAction&) const = default;
};

std::string kind_key(Kind k);                 // "close_to"
Kind kind_from_key(const std::string& key);
std::string direction_key(Direction d);       // "left"
Direction direction_from_key(const std::string& key);

// Lowercase textual description used in waypoint indicators, e.g.
// "move close to the target object"; direction and target are appended
// when present.
std::string primitive_text(const PrimitiveAction& p);

PrimitiveRef to_ref(const PrimitiveAction& p);
PrimitiveAction from_ref(const PrimitiveRef& r);

bool direction_allowed(Kind k);
void validate(const PrimitiveAction& p);  // throws std::invalid_argument

// ------------------------------------------------------------- rule parser

// Deterministic per-skill progression over geometric predicates; the
// desk-scale stand-in for the vision-language parser and the labeling
// oracle for generated demonstrations.
PrimitiveAction parse_primitive_rule(const sim::TaskSpec& task, const sim::WorldState& world);

// --------------------------------------------------------------- prompting

struct Message {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
  bool has_image = false;
  Observation image;  // attached when has_image
};

// One dialogue round of the fixed three-stage protocol:
// 1 describe scene -> 2 enumerate actions -> 3 decide current action.
struct PromptRound {
  int stage = 1;
  std::vector<Message> messages;
};

struct PromptContext {
  std::string scene;    // stage-1 output, needed by stages 2 and 3
  std::string actions;  // stage-2 output, needed by stage 3
};

// Alternative stage-1 templates; stages 2/3 are shared.
enum class PromptMode { Standard, NewInstruction, NewTask };

PromptRound build_prompt_rounds(const std::string& instruction, int stage,
                                const PromptContext& context,
                                PromptMode mode = PromptMode::Standard);

// Raw template text with {task}/{scene}/{actions} placeholders; golden
// copies live under assets/prompts/ and are byte-compared in tests.
const std::string& prompt_template(int stage, PromptMode mode = PromptMode::Standard);

// --------------------------------------------------------- output parsing

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string raw)
      : std::runtime_error(what), raw_text(std::move(raw)) {}
  std::string raw_text;
};

// Extracts the first balanced JSON object containing "do_action" and maps
// its action phrase through the fixed synonym table. Throws ParseError on
// malformed or unmappable output; callers fall back to the previous
// primitive.
PrimitiveAction parse_vlm_output(const std::string& text);

// Canonical stage-3 reply for a primitive; parse_vlm_output inverts it.
std::string render_canonical_response(const PrimitiveAction& p);

// Maps one action phrase ("move to", "clamp", "push left", ...) to a
// primitive kind and optional direction. Throws ParseError when the phrase
// is not in the synonym table.
std::pair<Kind, std::optional<Direction>> map_action_phrase(const std::string& phrase);

}  // namespace pivot::prim
