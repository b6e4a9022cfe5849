//! Default prompt templates, one per prompt kind.
//!
//! Templates are plain UTF-8 text with `{{name}}` placeholders. A template
//! file may carry a system section separated from the body by a line
//! containing only `---`. Section placeholders (`*_section`) substitute to
//! empty strings when there is nothing to show, so their surrounding text
//! must read correctly with the section omitted.

pub const P1_SYSTEM: &str = "You are a planning assistant for question answering over documents \
and images. You recall similar problems and outline how to solve them.";

pub const P1_BODY: &str = "Question: {{question}}

Recall {{n_plans}} sample problem(s) relevant to this question, each with a high-level plan for solving it.
Respond with exactly {{n_plans}} block(s). Wrap the k-th block in <relevant_k> ... </relevant_k> tags.
Each block must contain:
Problem: <one-line sample problem>
Plan:
1. <step>
2. <step>
";

pub const P2_SYSTEM: &str = "You are a planning assistant for question answering over documents \
and images. You write high-level plans and never mention specific tools or implementation details.";

pub const P2_BODY: &str = "Question: {{question}}

Reference sample problem and plan:
Problem: {{relevant_problem}}
Plan:
{{relevant_plan}}

{{mistakes_section}}Referring to the sample plan, write a high-level execution plan for answering the question.
Respond with short numbered steps (\"1.\", \"2.\", ...) only. Do not name tools and do not include implementation details.
";

pub const P3_SYSTEM: &str = "You are an execution assistant. You carry out one step of a plan at \
a time, using the provided inputs and tools, and state the step's output.";

pub const P3_BODY: &str = "Question: {{question}}

Execution unit for step {{step_index}}:
Definition: {{unit_definition}}
Expected output: {{expected_output}}
Inputs:
{{inputs_section}}

Available tools:
{{tools_section}}

{{mistakes_section}}Carry out this step and state its output.
To call a tool, include one line formatted exactly as: TOOL: <name>({\"arg\": value}). At most one tool call.
";

pub const P4_SYSTEM: &str = "You are a careful reviewer. You check execution plans and their \
execution processes for mistakes such as reversed sequences, wrong dependencies, redundant or \
missing steps, and mismatches between a step and its execution. You never correct anything yourself.";

pub const P4_BODY: &str = "Question: {{question}}

Review the following plan and its execution, step by step:

{{plan_process_section}}

After your analysis, output your verdict in exactly this format:
FLAG_PLAN: <true|false>
FLAG_EXE: <true|false>
MISTAKE: <plan|execution> step <k|whole> \u{2014} <brief description>

Emit one MISTAKE line per mistake and none when both flags are false.
";

pub const P5_SYSTEM: &str = "You are an answering assistant. You summarize an execution process \
into a final answer, staying aware of mistakes that were found along the way.";

pub const P5_BODY: &str = "Question: {{question}}

Execution process:
{{process_section}}

{{mistakes_section}}Using the execution process above, give the final answer to the question. Answer concisely.
";
