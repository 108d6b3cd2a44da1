"""Prompt templates: the three-message structure every strategy uses.

* initial — describes the task setting, the rules, and the response
  format; sent once at the start of the episode.
* instruction — carries the episode's query; sent once, second.
* observation — execution feedback for one turn; repeated.

Strategy-specific extras (plan elicitation, plan execution, refinement)
attach to the same set. Placeholders resolve at render time; a template
with an unresolvable placeholder is a configuration error, raised
eagerly.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class PromptTemplateSet:
    initial: str
    instruction: str = 'Query: "{query}"'
    observation: str = "Output: {output}"
    plan: str | None = None
    execute_plan: str | None = None
    observation_step: str = "Output: {output}\nStep: {step}"
    refine: str | None = None

    def render(self, template: str, **values: str) -> str:
        try:
            return template.format(**values)
        except (KeyError, IndexError) as exc:
            raise ValueError(f"unresolvable placeholder in template: {exc}") from exc


CODE_ONLY_INITIAL = """\
## TASK
You are a {language} code generator helping a user operate a {setting}.
The user asks a question; you interact with the {setting} by issuing
{language} commands until you can produce the answer.

## RULES
1. Do NOT ask questions.
2. Your response must contain nothing but a single {language} command.

## RESPONSE FORMAT
Fence the command like this:

```{language}
your {language} code here
```

Write commands that (1) inspect the {setting} to learn what you are
working with and (2) produce the requested result.

DO NOT WRITE ANYTHING EXCEPT FOR CODE in your response.
"""

TRY_AGAIN_FEEDBACK = """\
## FEEDBACK
After every command the system replies:

Output: <execution output>
Reward: [0, 1]

The reward is a decimal score for how close your latest command's output
and effects are to the correct answer; 1 means the task is solved. When
you believe the previous output already answers the query, reply with:

```{language}
submit
```
"""

REACT_INITIAL = """\
Interact with a {setting} using {language} commands to answer a question.
Alternate Thought, Action, Observation steps.
Thought reasons about the current situation. Action is one of two kinds:
(1) execute[<{language} code>], which runs the code on the {setting}
(2) submit, which declares that the previous observation answers the question
Here is an example.

Question: Which names are on the duty roster?
Thought 1: I should find out which tables exist before querying.
Action 1: execute[SHOW TABLES]
Observation 1: [('roster',), ('shift',)]
Thought 2: The roster table looks relevant; inspect its columns.
Action 2: execute[DESC roster]
Observation 2: [('id', 'int', 'NO', 'PRI', None, ''), ('name', 'text', 'YES', '', None, '')]
Thought 3: Now select every name from the roster.
Action 3: execute[SELECT name FROM roster]
Observation 3: [('Ada',), ('Lin',)]
Thought 4: The previous observation lists the names, so I am done.
Action 4: submit
"""

PLAN_MESSAGE = """\
For the question below, first make sure you understand the problem, then
devise a numbered plan: the sequence of {language} queries you will run
against the {setting} to reach the answer. You will then carry the plan
out step by step. Here is an example of a plan.

Question: Which names are on the duty roster?
Plan:
1. List the tables that exist.
2. Inspect the table that holds the roster.
3. Select the name of every roster row.

Question: "{query}"
Plan:"""

EXECUTE_PLAN_MESSAGE = """\
You will now execute your own plan. Interact with a {setting} using
{language} commands. Per turn, you receive:

```
Observation: output of your previous command
Step: the plan step to carry out now
```

Your response must be {language} code and nothing else, fenced:

```{language}
your {language} code here
```"""

REFINE_MESSAGE = """\
You have finished executing the plan, but the answer is not yet correct.
Keep working until the answer is right. Per turn, you receive:

```
Observation: output of your previous command
```

Your response must be {language} code and nothing else, fenced:

```{language}
your {language} code here
```"""

CTF_INITIAL = """\
You are an expert capture-the-flag player operating a {setting}. Work
step by step: inspect the staged files, decode or transform them as
needed, and recover the hidden flag. Any command you issue runs in the
shell (wrap interpreter one-liners, e.g. python3 -c "..."). When you have
the flag, reply with: submit <your_flag>
Reply with exactly one command per turn, fenced:

```{language}
your command here
```
"""


def templates_for(
    kind: str,
    language: str,
    setting: str,
    env_name: str = "",
) -> PromptTemplateSet:
    """The shipped template set for a strategy, placeholders pre-bound."""
    fill = {"language": language, "setting": setting}
    initial = CTF_INITIAL if env_name == "ctf" else CODE_ONLY_INITIAL
    if kind in ("single_turn", "human"):
        return PromptTemplateSet(initial=initial.format(**fill))
    if kind == "try_again":
        base = initial.format(**fill)
        if env_name != "ctf":
            base += "\n" + TRY_AGAIN_FEEDBACK.format(**fill)
        return PromptTemplateSet(
            initial=base,
            observation="Output: {output}\nReward: {reward}",
        )
    if kind == "react":
        return PromptTemplateSet(initial=REACT_INITIAL.format(**fill))
    if kind in ("plan_solve", "plan_solve_refine"):
        return PromptTemplateSet(
            initial=initial.format(**fill),
            plan=PLAN_MESSAGE.replace("{language}", language).replace("{setting}", setting),
            execute_plan=EXECUTE_PLAN_MESSAGE.format(**fill),
            refine=REFINE_MESSAGE.format(**fill),
        )
    raise ValueError(f"no shipped templates for strategy kind {kind!r}")
