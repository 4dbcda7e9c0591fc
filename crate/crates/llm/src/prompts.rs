//! Prompt templates and the placeholder renderer.
//!
//! Templates use `{name}` placeholders; `{{` and `}}` stand for literal
//! braces. Rendering fails with every unresolved name listed.

use std::collections::BTreeMap;

use crate::error::LlmError;

/// Template identifiers, one per prompt the agents and the judge can receive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Template {
    BaseSystem,
    BaseProposal,
    BaseVote,
    BaseUpdate,
    MindSystem,
    MindProposal,
    MindAppraisal,
    MindVote,
    MindUpdate,
    JudgeSystem,
    JudgeUser,
}

impl Template {
    pub fn text(self) -> &'static str {
        match self {
            Template::BaseSystem => BASE_SYSTEM,
            Template::BaseProposal => BASE_P1,
            Template::BaseVote => BASE_P2,
            Template::BaseUpdate => BASE_P3,
            Template::MindSystem => MIND_SYSTEM,
            Template::MindProposal => MIND_P1,
            Template::MindAppraisal => MIND_P2A,
            Template::MindVote => MIND_P2B,
            Template::MindUpdate => MIND_P3,
            Template::JudgeSystem => JUDGE_SYSTEM,
            Template::JudgeUser => JUDGE_USER,
        }
    }
}

pub type Bindings = BTreeMap<&'static str, String>;

/// Substitutes `{name}` placeholders from `bindings`.
pub fn render(template: &str, bindings: &Bindings) -> Result<String, LlmError> {
    let mut out = String::with_capacity(template.len() + 256);
    let mut missing: Vec<String> = Vec::new();
    let mut rest = template;
    while let Some(pos) = rest.find(['{', '}']) {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if tail.starts_with("{{") {
            out.push('{');
            rest = &tail[2..];
        } else if tail.starts_with("}}") {
            out.push('}');
            rest = &tail[2..];
        } else if tail.starts_with('}') {
            return Err(LlmError::Template("unmatched `}`".into()));
        } else {
            let end = tail
                .find('}')
                .ok_or_else(|| LlmError::Template("unterminated placeholder".into()))?;
            let name = &tail[1..end];
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(LlmError::Template(format!("bad placeholder `{{{name}}}`")));
            }
            match bindings.get(name) {
                Some(v) => out.push_str(v),
                None => {
                    if !missing.iter().any(|m| m == name) {
                        missing.push(name.to_string());
                    }
                }
            }
            rest = &tail[end + 1..];
        }
    }
    out.push_str(rest);
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(LlmError::MissingBinding(missing))
    }
}

/// Placeholder names used by a template, in first-use order.
pub fn placeholders(template: &str) -> Vec<&str> {
    let mut names = Vec::new();
    let mut rest = template;
    while let Some(pos) = rest.find(['{', '}']) {
        let tail = &rest[pos..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            rest = &tail[2..];
            continue;
        }
        match tail.find('}') {
            Some(end) if tail.starts_with('{') => {
                let name = &tail[1..end];
                if !names.contains(&name) {
                    names.push(name);
                }
                rest = &tail[end + 1..];
            }
            _ => rest = &tail[1..],
        }
    }
    names
}

pub const BASE_SYSTEM: &str = r#"[ACTIVE TARGET]
target_key: {target_key}
your_private_value_for_target: {current_private_value}

Do NOT mention any preference strength, alpha, or importance.

### Goal & Rules
- Goal: Reach a "Global Travel Constraint Set" within up to 3 rounds.
- You do NOT know others' importance scores (only infer from language).
- Do NOT state numerical importance scores.
- Negotiate one item at a time using the given target key/value in each round.
- Justify your stance using your private data and your interpretation of the discussion."#;

pub const BASE_P1: &str = r#"### Task
Propose the initial "Global Travel Constraints" based on your preference data.

### Output format
Return ONLY valid JSON.
{{
"proposals": {{ "<category>__<item>": "<value>", "..." : "..." }},
"rationale": "<persuasive explanation>"
}}

# Output Field Description
- proposals: Include a proposed value for each relevant constraint item.
- rationale: You must provide a grounded and convincing reason for your proposal **within 10–15 words**.

### Rules:
- Include a proposed value for each relevant constraint item.
- Persuasive Rationale: You must provide a grounded and convincing reason for your proposal.
- Ensure the total plan respects the budget ${budget_anchor}.
- Keep the proposed value as close as possible to your private_value.
- Do NOT strategically compromise or modify your preferences in Phase 1. Any adjustment is allowed ONLY from Phase 2 onward.
- Do NOT include any text outside the JSON.

### Travel Information
Group size: {people_number}
Trip: {org} → {dest} ({days} days)
Total budget: ${budget_anchor}

### Preference Data
{filtered_constraints}"#;

pub const BASE_P2: &str = r#"### Task: Phase 2 – Debate & Adjustment (Round {current_round})
Persuade other participants to reach a mutual agreement while balancing private preferences and group constraints.

### Context
Target Constraint: {target_key}
Current Proposed Value: {current_value}
Previous Discussion History: {discussion_history}
Current Round: {current_round}

### Instructions
- Act as a representative of your private preferences, basing all reasoning strictly on the alignment with your private data and the logical constraints of the overall budget.
- You may agree if the proposal is a reasonable compromise that respects the group's budget ${budget_anchor}.

### Output format
Return ONLY valid JSON.
{{ "vote": "AGREE or DISAGREE", "revised_value": "value", "rationale": "<persuasive explanation>" }}

### Output Field Description
- vote: Select either AGREE or DISAGREE.
- revised_value: If your vote is DISAGREE, propose a specific alternative value. If AGREE, set this to null.
- rationale: Provide a grounded and convincing reason for your decision. (Strictly 10–15 words)."#;

pub const BASE_P3: &str = r#"ROLE: You are the PROPOSER for a travel planning group.

### TASK
Your current proposal for {target_key} was not accepted by the group.
Update the proposal to increase consensus (aiming for 75%+ agreement).

### VALUE PROTOCOL (STRICT)
- REVISED_VALUE must be an EXACT string copy from the list below.
- Do NOT shorten, summarize, or add extra brackets (e.g., Use "Morning (06:00 - 12:00)", NOT "Morning").
- Failure to copy exactly will result in a system error.

### ALLOWED VALUES
{allowed_values}

### CURRENT CONTEXT
- Target Item: {target_key}
- Current Proposal: {current_value}
- Your Private Preference: {current_private_value}

### DISSENT SUMMARY
{dissent_text}

### INSTRUCTIONS
1. Analyze the dissent and select ONE value from ALLOWED VALUES that balances the group's needs.
2. If you believe your current proposal is still the best for a majority, you may KEEP it.
3. PROPOSER_REASON must be concise (10-15 words).

### OUTPUT FORMAT (TAGS ONLY)
[REVISED_VALUE: <exact_string_from_list>]
[PROPOSER_REASON: <10-15 words explanation>]"#;

pub const MIND_SYSTEM: &str = r#"[ACTIVE TARGET]
target_key: {target_key}
your_private_value_for_target: {current_private_value}
your_alpha_band_for_target: {alpha_band}

Do NOT reveal numeric alpha or importance scores.

### Alpha Band (Tone & Stance Guidance)
Use alpha_band to guide your communication style AND flexibility:
- 9–10: Strict (Deal-breaker. Urgent tone. No compromise.)
- 7–8: Firm (Strong preference. Assertive tone. Compromise only if necessary.)
- 4–6: Warm (Flexible preference. Polite tone. Ready to accommodate.)
- 1–3: Neutral (Indifferent. Passive tone. Follow the majority.)

### GOAL: INTELLIGENT CONSENSUS
You are a socially intelligent agent. Your goal is to maximize group satisfaction, not just your own.
1. **Detect Urgency**: If others sound "Strict" or "Firm" while you are "Warm" or "Neutral", you MUST yield. This is efficient, not weak.
2. **Defend Essentials**: Only block consensus if your Alpha is 9-10.
3. **Budget Check**: Ensure the final choice respects the budget: ${budget_anchor}.

### Rules
- Negotiate one item at a time.
- Infer others' importance from their language (Linguistic Signaling).
- Never state numbers explicitly."#;

pub const MIND_P1: &str = r#"### 1. YOUR PRIVATE DATA (Read Carefully)
You only know your own preferences. This is the ONLY data you should use:
{filtered_constraints}

### 2. TASK: Initial Global Proposal
Propose the "Global Travel Constraints" for the entire trip based ONLY on your data above.
Ensure the total plan respects the budget: ${budget_anchor}.

### 3. MANDATORY OUTPUT FORMAT (JSON ONLY)
Return ONLY valid JSON. Do not include any text outside the JSON.
{{
  "proposals": {{ "{{category}}__{{item}}": "<proposed value>", ... }},
  "rationale": "<15-20 words. Strategic explanation reflecting your Alpha tone. NEVER mention alpha numbers.>"
}}

### 4. ALPHA ROLE GUIDELINES (Use for Tone only)
- 9–10 (strict): Strict and cold. Demand compliance.
- 7–8 (FIRM): Tough and confident. Defend your logic.
- 4–6 (warm): Warm and polite. Collaborative.
- 1–3 (Neutral): Indifferent and brief.

### 5. STRICT RULES
- Do NOT strategically compromise in Phase 1.
- Propose values exactly as they appear in your Private Data.
- Adjustment is ONLY allowed from Phase 2 onward.
- NOTE: If disagreement persists in later rounds, you may adjust your stance according to your Alpha tone."#;

pub const MIND_P2A: &str = r#"ROLE: You are an expert in social inference and negotiation analysis (VOTER).

### INTERNAL CONTEXT (DO NOT REVEAL)
- Target Item: {target_key}
- Your Private Value: {current_private_value}
- Your Alpha Band: {alpha_band}
- Current Group Proposal: {current_value}

### TASK: DEEP COGNITIVE APPRAISAL
Decode the proposer's hidden priority and determine your counter-strategy.

1. GUESSED_OPPONENT_ALPHA (1–10):
- Based on linguistic intensity (e.g., "Must", "Essential" → 9-10; "Prefer", "Nice to have" → 1-4).
2. OPPONENT_ROOM_FOR_COMPROMISE (true/false):
- Is their language absolute/terminal?
3. STRATEGY_INTENT (PRINCIPLES OF SOCIAL INTELLIGENCE):
- **accept**: [Rationality Check] Verify if {current_value} is semantically equivalent to {current_private_value}.
- **yield**: [Efficiency Principle] If you perceive the opponent's urgency (`Guessed Alpha`) is higher than yours, yielding is the optimal move.
- **compromise**: [Balance Principle] If both parties show similar priority levels, search for a middle ground.
- **push**: [Justified Defense] Only aggressive persistence is justified when your priority is significantly higher.

### OUTPUT FORMAT (JSON ONLY)
{{ "appraisal": {{ "guessed_opponent_alpha": <int>, "strategy_intent": "yield/push/..." }} }}"#;

/// The execution prompt names no reply shape of its own, so the vote JSON
/// contract of the debate prompt is appended after it.
pub const MIND_P2B: &str = r#"### DECISION CONTEXT
- Alpha: {alpha_band} | Strategy: {strategy_intent} (from appraisal)
- Allowed Values (Copy EXACTLY): {allowed_values}

### TASK: EXECUTE STRATEGY
Follow your internal strategy {strategy_intent} to finalize your response.
1. DATA PROTOCOL (STRICT): REVISED_VALUE must be an EXACT match from the Allowed Values list.
2. ACTION MAPPING:
- If Strategy="yield" → vote: "AGREE", revised_value: null.
- If Strategy="compromise" → vote: "DISAGREE", revised_value: (pick middle ground).
- If Strategy="push" → vote: "DISAGREE", revised_value: {current_private_value}.
3. MESSAGE: Direct speech to the group. No alpha/tone words.

### LOGICAL GUARD
It is a failure of logic to analyze the opponent as higher priority and then vote DISAGREE with your own value. Ensure your vote aligns with the conflict gap you identified.

### Output format
Return ONLY valid JSON.
{{ "vote": "AGREE or DISAGREE", "revised_value": "value", "rationale": "<persuasive explanation>" }}"#;

/// The output block lists every tag the parser reads; the revised-value and
/// reason tags are the same contract the baseline proposer uses.
pub const MIND_P3: &str = r#"ROLE: You are the PROPOSER for a travel planning group.

### INTERNAL CONTEXT
- Dissent Rate: {dissent_rate} (e.g., "2 out of 3 agents disagree")

### TASK: STRATEGIC PROPOSAL UPDATE
Update the proposal to maximize consensus probability (Aim for 75%+).

### SOCIAL INTELLIGENCE RULES (MANDATORY)
1. **MAJORITY PRESSURE**: If Dissent Rate indicates majority disagreement (>50%), you **MUST** change your proposal (UPDATE or COMPROMISE), unless your Alpha is strictly 10.
2. **SIGNAL READING**: If dissenters use "Strict/Firm" language and you are only "Warm/Neutral", you MUST adopt their value (UPDATE).
3. **STUBBORNNESS PENALTY**: Maintaining (KEEP) a proposal that the majority dislikes is considered a failure of intelligence.

### ACTION SELECTION:
- KEEP: Only if Alpha is 9-10 OR Dissent Rate is low.
- UPDATE: Adopt a dissenter's value (Best for increasing agreement quickly).
- COMPROMISE: Pick a middle-ground value from {allowed_values}.

### OUTPUT FORMAT (TAGS ONLY)
[ACTION: KEEP|UPDATE|COMPROMISE]
[REVISED_VALUE: <exact_string_from_list>]
[PROPOSER_REASON: <10-15 words explanation>]"#;

pub const JUDGE_SYSTEM: &str = r#"You are a judge evaluating two multi-agent travel negotiation results (Plan A vs. Plan B).
Evaluate based on the QUALITY of the negotiation process, not just the final outcome.

Evaluation Criteria (5 Qualitative Metrics):

1. Negotiation Rationality:
- Is the process of reaching the final result logical?
- Were high-alpha (important) agents' opinions not ignored and reasonably reflected?
- Did the negotiation flow make sense given each agent's priorities?

2. Preference Alignment:
- How well does the final result align with each persona's initial constraints?
- Were important preferences (high-alpha items) preserved in the final outcome?

3. Reason-Value Validity:
- Does the stated "reason" actually justify the proposed "value"?
- Are the arguments logically sound and relevant to the constraint being discussed?

4. Opinion Change Justification:
- When a proposer/voter changes their position, is the reason for change clear and valid?
- When they maintain their position, is the justification convincing?
- Is it clear WHY they changed or stuck to their opinion?

5. Fluency & Naturalness:
- Does the conversation feel like a real group travel discussion, not robotic?
- Are the sentences natural and human-like?
- Is there appropriate back-and-forth dialogue?

Scoring Guide:
- Compare the CONVERSATION SAMPLES between Plan A and Plan B
- Look for logical reasoning, empathy, and natural language
- Prefer plans where agents clearly explain their thought process

Output Format:
For each of the 5 criteria, decide who wins (A or B), then give the final overall winner.
You must output structured results with NO reasoning."#;

pub const JUDGE_USER: &str = r#"Here are two negotiation results:

<plan_A>
[Version]: {version_a}
[Final Constraints]: {constraints_a}
[Conversation Samples]:
{conversation_a}
</plan_A>

<plan_B>
[Version]: {version_b}
[Final Constraints]: {constraints_b}
[Conversation Samples]:
{conversation_b}
</plan_B>"#;

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&'static str, &str)]) -> Bindings {
        pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
    }

    #[test]
    fn renders_and_unescapes() {
        let out = render("a {x} {{lit}} b", &bind(&[("x", "1")])).unwrap();
        assert_eq!(out, "a 1 {lit} b");
    }

    #[test]
    fn reports_every_missing_binding() {
        let err = render(BASE_P3, &bind(&[("target_key", "k")])).unwrap_err();
        assert_eq!(
            err.to_string(),
            "missing-binding: allowed_values, current_value, current_private_value, dissent_text"
        );
        let err = render("{allowed_values}", &Bindings::new()).unwrap_err();
        assert_eq!(err.to_string(), "missing-binding: allowed_values");
    }

    #[test]
    fn rejects_stray_braces() {
        assert!(render("oops }", &Bindings::new()).is_err());
        assert!(render("oops {", &Bindings::new()).is_err());
        assert!(render("{ spaced }", &Bindings::new()).is_err());
    }

    #[test]
    fn every_template_parses() {
        let all = [
            Template::BaseSystem,
            Template::BaseProposal,
            Template::BaseVote,
            Template::BaseUpdate,
            Template::MindSystem,
            Template::MindProposal,
            Template::MindAppraisal,
            Template::MindVote,
            Template::MindUpdate,
            Template::JudgeSystem,
            Template::JudgeUser,
        ];
        for t in all {
            let names = placeholders(t.text());
            let b: Bindings = names
                .iter()
                .map(|n| {
                    let key: &'static str = Box::leak(n.to_string().into_boxed_str());
                    (key, format!("<{n}>"))
                })
                .collect();
            let out = render(t.text(), &b).unwrap();
            assert!(!out.contains("{{"), "{t:?}");
        }
    }

    #[test]
    fn placeholder_sets() {
        assert_eq!(
            placeholders(MIND_P2B),
            vec!["alpha_band", "strategy_intent", "allowed_values", "current_private_value"]
        );
        assert_eq!(placeholders(MIND_P3), vec!["dissent_rate", "allowed_values"]);
        assert_eq!(
            placeholders(JUDGE_USER),
            vec!["version_a", "constraints_a", "conversation_a", "version_b", "constraints_b", "conversation_b"]
        );
    }
}
