#include "pivot/primitives.hpp"

namespace pivot::prim {

namespace {

// Placeholders {task}, {scene}, {actions} are the only bytes that change at
// instantiation; golden copies of these templates live in assets/prompts/.

const std::string kStage1 = R"TPL(Given a task, which is for a mobile Franka panda robotic arm to learn a manipulation skill in the simulator.

Your task is to help me break down the process of the robot performing the task into several actions to help the robot better understand and execute.

Capabilities: The task can only be completed with a robotic arm, which can move, rotate and clamp.

You should output the response using the same format as the following:
"""
    "scene": "You should description the scene"
"""

Here is one example:
"""
    Input: Close the red jar.

    Output: On the table, there is a red jar, a blue jar, and a bottle cap
"""

Can you do it for the following input:
"""
    Task: {task}
"""
)TPL";

const std::string kStage2 = R"TPL(Given a task, which is for a mobile Franka panda robotic arm to learn a manipulation skill in the simulator. Your task is to help me break down the process of the robot performing the task into several actions to help the robot better understand and execute.

Capabilities: The task can only be completed with a robotic arm, which can move, rotate and clamp.

You should output response using the same format as the following:
"""
    "actions": [
        {
            "action": "The action name",
            "target": "The target object"
        },
        ... #actions which are needed to complete the task
    ]
"""

The actions you can choose include the following:
"""
    move to : move the gripper closer to an object,
    clamp : use gripper to clamp the object,
    unclamp : open gripper to unclamp the object,
    screw : rotate the gripper for opening or closing lid,
    lift : lift the object,
    push : push the object + (direction),
    pull : pull the object + (direction),
"""

Here is one example:
"""
Input:
Task: close the red jar.
Scene: On the table, there is a red jar, a blue jar, and a bottle cap.

Output:
    "actions": [
        {
            "action": "move to",
            "target": "the bottle cap"
        },
        {
            "action": "clamp",
            "target": "the bottle cap"
        },
        {
            "action": "move to",
            "target": "the red jar"
        },
        {
            "action": "rotate",
            "target": "the bottle cap"
        }
    ]
"""

Can you do it for the following task:
"""
    Task: {task}

    Scene: {scene}
"""
)TPL";

const std::string kStage3 = R"TPL(Given a task, which is for a mobile Franka panda robotic arm to learn a manipulation skill in the simulator. Your task is to help me break down the process of the robot performing the task into several actions to help the robot better understand and execute.

Capabilities: The task can only be completed with a robotic arm, which can move, rotate and clamp.

You should output one action that should be done at the current moment, and only can output one.
You should output response using the same format as the following json file, and don't need to output escape characters
"""
{
    "do_action": {
            "action": "The action name",
            "target": "The target object"
        }
}
"""

The actions you can choose include the following:
"""
    move to : move the gripper closer to an object,
    clamp : use gripper to clamp the object,
    unclamp : open gripper to unclamp the object,
    screw : rotate the gripper for opening or closing lid,
    lift : lift the object,
    push : push the object + (direction),
    pull : pull the object + (direction),
"""

Here is one example:
"""
Input:
Task: close the red jar.
Scene: On the table, there is a red jar, a blue jar, and a bottle cap.
Actions: [
        {
            "action": "move to",
            "target": "the bottle cap"
        },
        {
            "action": "clamp",
            "target": "the bottle cap"
        },
        {
            "action": "move to",
            "target": "the red jar"
        },
        {
            "action": "rotate",
            "target": "the bottle cap"
        }
    ]

Output:
{
    "do_action":
        {
            "action": "move to",
            "target": "the red jar"
        }
}
"""

Can you do it for the following task:
"""
    Task: {task}
    Scene: {scene}
    Actions: {actions}
"""
)TPL";

const std::string kNewInstruction = R"TPL(Given a task, which is for a mobile Franka panda robotic arm to learn a manipulation skill in the simulator. Your task is to help me break down the process of the robot performing the task into several actions to help the robot better understand and execute.

Capabilities: The task can only be completed with a robotic arm, which can move, rotate and clamp.

You need to give an instruction base on the skills you have learned according to the given tasks.
You should output the response using the same format as the following json file:
"""
{
    "instruction": "You should description the instruction here",
}
"""

The skills you have learned:
"""
    Pick Target : Grasp the target object and lift it,
    Place Target : place the target object on the table,
    Move A Near B : Grasp A and move it closer to B,
    Open Door : Open the door,
    Close Door : Close the door,
    Push Target : push the object + (direction),
    Knock Target Over : Knock the target object over,
"""

Here is one example:
"""
Input:
Task: The bottle is on the edge of the table, it's too dangerous.

Output:
{
    "instruction": "Push the bottle front",
}
"""

Can you do it for the following task:
"""
    Task: {task}
"""
)TPL";

const std::string kNewTask = R"TPL(Given a task, which is for a mobile Franka panda robotic arm to learn a manipulation skill in the simulator. Your task is to help me break down the process of the robot performing the task into several actions to help the robot better understand and execute.

Capabilities: The task can only be completed with a robotic arm, which can move, rotate and clamp.

You need to complete a given task, based on the skills and actions you have learned.
You should output the response using the same format as the following json file:
"""
{
    "instruction": "You should description the instruction here",
    "actions": [
        {
            "action": "The action name",
            "target": "The target object"
        },
        ... # actions which are needed to complete the task
    ],
    "do_action": {
            "action": "The action name",
            "target": "The target object"
        }
}
"""

The skills you have learned:
"""
    Pick Target : Grasp the target object and lift it,
    Place Target : place the target object on the table,
    Move A Near B : Grasp A and move it closer to B,
    Open Door : Open the door,
    Close Door : Close the door,
    Push Target : push the object + (direction),
    Knock Target Over : Knock the target object over,
"""

The actions you can choose include the following:
"""
    move to : move the gripper closer to an object,
    clamp : use gripper to clamp the object,
    unclamp : open gripper to unclamp the object,
    screw : rotate the gripper for opening or closing lid,
    lift : lift the object,
    move : move the object + (direction),
"""

Here is one example:
"""
Input:
Task: Hello, I'm on your right, can you bring me the object on the table.

Output:
{
    "instruction": "Pick up the object and move right",
    "actions": [
        {
            "action": "close to",
            "target": "the object"
        },
        {
            "action": "clamp",
            "target": "the object"
        },
        {
            "action": "move up",
            "target": "the object"
        },
        {
            "action": "move right",
            "target": "the object"
        }
    ],
    "do_action":
        {
            "action": "close to",
            "target": "the object"
        }
}
"""

Can you do it for the following task:
"""
    Task: {task}
"""
)TPL";

std::string substitute(std::string text, const std::string& key, const std::string& value) {
  const std::string needle = "{" + key + "}";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

const std::string& prompt_template(int stage, PromptMode mode) {
  if (stage == 1) {
    switch (mode) {
      case PromptMode::Standard: return kStage1;
      case PromptMode::NewInstruction: return kNewInstruction;
      case PromptMode::NewTask: return kNewTask;
    }
  }
  if (stage == 2) return kStage2;
  if (stage == 3) return kStage3;
  throw std::invalid_argument("prompt stage must be 1, 2 or 3");
}

PromptRound build_prompt_rounds(const std::string& instruction, int stage,
                                const PromptContext& context, PromptMode mode) {
  if (instruction.empty()) throw std::invalid_argument("prompt: empty instruction");
  if (stage == 2 && context.scene.empty()) {
    throw std::invalid_argument("prompt stage 2 requires the stage-1 scene text");
  }
  if (stage == 3 && (context.scene.empty() || context.actions.empty())) {
    throw std::invalid_argument("prompt stage 3 requires scene and action-list context");
  }

  std::string text = prompt_template(stage, mode);
  text = substitute(std::move(text), "task", instruction);
  if (stage >= 2) text = substitute(std::move(text), "scene", context.scene);
  if (stage == 3) text = substitute(std::move(text), "actions", context.actions);

  PromptRound round;
  round.stage = stage;
  round.messages.push_back(Message{"user", std::move(text), false, {}});
  return round;
}

}  // namespace pivot::prim
