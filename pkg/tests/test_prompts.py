"""Golden tests pinning the exact prompt wording each model receives."""

from groundling import prompts
from groundling.language import build_text_messages, build_verifier_prompt
from groundling.plan import Instruction, ParseStatus, Subtask, build_planner_prompt
from groundling.vision import GroundingRecord, build_vision_messages


def _texts(messages):
    return [part["text"] for msg in messages for part in msg["content"]
            if part["type"] == "text"]


class TestPlannerPrompt:
    def test_contains_frozen_fragments(self):
        p = build_planner_prompt(Instruction("put the cup on the table"))
        for fragment in [
            "You are a planning assistant for a fixed robotic arm.",
            "sequence of **essential high-level commands**",
            "Example Plan Format (Use **exactly** this level of granularity):",
            "Plan for the robot arm:",
            "Goal: Put the apple in the red bowl\n"
            "1. pick up the apple /(apple)/\n"
            "2. place the apple in the red bowl /(apple, red bowl)/",
            "Goal: Put the cup in the microwave and close it",
            "Goal: Turn on the stove and put the pot on it",
            "Goal: Put both books on the bookshelf",
            "Goal: pick the red book near the butter and the brown book on the "
            "plate and put them on the left bookshelf",
            "Goal: pick up the yellow and white mug next to the cookie box and "
            "place it on the plate",
            "Goal: put the black bowl in the bottom drawer of the cabinet and close it",
            "***WITHOUT ANY OTHER ANALYSIS and DESCRIPTION***",
            '(e.g., "first pot", "back of the shelf", "bottom of sth", "upper of sth")',
            "**ONLY USE */()/* to EXPRESS *OBJECTS*.**",
            "- `pick up [object]`",
            "- `place [object] on [location]`",
            "- `place [object] in [location]`",
            "- `turn on [device]`",
            "- `turn off [device]`",
            "- `locate` (Assume VLA finds the object as part of executing the command)",
            "**DO NOT make any distortions**",
            "- Additional INFO:",
            "Task: put the cup on the table\nOutput:",
        ]:
            assert fragment in p, fragment

    def test_additional_info_branches(self):
        task = Instruction("x the y")
        assert "You are doing a good job, keep it up" in \
            build_planner_prompt(task, ParseStatus.SUCCESS)
        assert "PAY MORE ATTENTION TO THE SUBTASKS in your last output, no valid " \
            "subtask found." in build_planner_prompt(task, ParseStatus.NO_SUBTASK_FOUND)
        assert "no valid objects found in /(here)/" in \
            build_planner_prompt(task, ParseStatus.NO_OBJECTS_FOUND)
        assert "PAY MORE ATTENTION TO THE SUBTASKS and OBJECTS" in \
            build_planner_prompt(task, ParseStatus.NO_SUBTASK_OR_OBJECTS)

    def test_inlist_interpolated(self):
        p = build_planner_prompt(Instruction("t"), inlist=["saucer", "moutai"])
        assert "if the task involves saucer, moutai, make sure" in p


class TestVerifierPrompt:
    PREFIX = ("Observe the inputs (two videos or two image-flow videos). "
              "The subtask robot arm is currently working on: ")

    def test_pick_up_branch(self):
        p = build_verifier_prompt(Subtask(1, "pick up", "pick up the plate", ["plate"]))
        assert p == (self.PREFIX + "'pick up the plate'. "
                     " Based *Only* on the provided media, has 'plate' or anything "
                     "else been grasped and lifted off any surface by the end? "
                     "Answer 'Yes' or 'No'.")

    def test_place_branch(self):
        p = build_verifier_prompt(Subtask(
            1, "place-on", "place the plate on the stove", ["plate", "stove"]))
        assert "has 'plate' or anything else been placed 'stove' and is the " \
            "gripper away? Answer 'Yes' or 'No'." in p

    def test_state_branches(self):
        for verb, phrase in [("turn on", "turned on (powered up)"),
                             ("turn off", "turned off (powered down)"),
                             ("open", "fully opened"),
                             ("close", "fully closed")]:
            p = build_verifier_prompt(Subtask(1, verb, f"{verb} the stove", ["stove"]))
            assert f"has 'stove' or anything else been {phrase} by the end? " \
                "Answer 'Yes' or 'No'." in p

    def test_fallback_branch(self):
        sub = Subtask(1, "pick up", "wiggle the plate", ["plate"])
        sub.verb = "unknown"  # bypass validation to reach the else branch
        p = build_verifier_prompt(sub)
        assert "has the instructed action been completed successfully by the " \
            "end? Answer 'Yes' or 'No'." in p


class TestVisionPrompt:
    def test_system_fragments(self):
        msgs = build_vision_messages("saucer", collage="C", current_image="I")
        system = msgs[0]["content"][0]["text"]
        for fragment in [
            "generate five of the most relevant keywords",
            "**Think in ten sentences.** You must follow this rule strictly.",
            "Focus on describing the person's gender, skin tone, and occupation.",
            'Example keywords might include: "round", "metallic", "small", etc.',
            'There is something suitable for the query"saucer", but the model '
            "can't find the bbox exactly.",
            'Example JSON Output: ["female", "light-skinned", "doctor", '
            '"middle-aged", "smiling"].',
            '--match = re.search(r"\\[.*?\\]", output_text[0])',
            "input:saucer",
            "output:",
        ]:
            assert fragment in system, fragment

    def test_image_turns(self):
        msgs = build_vision_messages("saucer", "C", "I")
        assert _texts(msgs)[1:] == ["Here is the combined image from the web.",
                                    "This is the current image from the camera."]
        assert msgs[1]["content"][1]["image"] == "C"
        assert msgs[2]["content"][1]["image"] == "I"


class TestTextPrompt:
    VOCAB = ["black bowl", "plate"]

    def test_fixed_turns(self):
        msgs = build_text_messages("saucer", self.VOCAB, record=None)
        texts = _texts(msgs)
        assert texts[0] == (
            "You normalize open-world object mentions to a closed training "
            "vocabulary. Return EXACTLY ONE label copied verbatim from the "
            "allowed list below, or output NONE if no label applies.")
        assert texts[1] == "Allowed vocabulary:\n- black bowl\n- plate"
        assert texts[2] == "New object mention: saucer"
        assert texts[-1] == (
            "STRICT CONSTRAINTS:\n"
            "- Output MUST be exactly one label copied verbatim from the allowed "
            "vocabulary above, or the token NONE when no label applies.\n"
            "- DO NOT include any analysis, explanation, reasoning, or additional text.\n"
            "- Format your final decision ONLY as:\n"
            "  <answer>LABEL_OR_NONE</answer>\n"
            "- LABEL_OR_NONE must be one of the allowed labels or NONE.")

    def test_case_crop_only(self):
        rec = GroundingRecord(term="saucer", crop="CROP", candidate_count=1)
        msgs = build_text_messages("saucer", self.VOCAB, rec)
        texts = _texts(msgs)
        assert "Evidence crop (highest detector score)." in texts
        assert "Context image." not in texts

    def test_case_no_signal_uses_context_image_once(self):
        msgs = build_text_messages("saucer", self.VOCAB, record=None,
                                   current_image="FRAME")
        texts = _texts(msgs)
        assert texts.count("Context image.") == 1

    def test_case_full_evidence(self):
        rec = GroundingRecord(term="saucer", crop="CROP",
                              keywords=["flat", "shallow"], candidate_count=1)
        rec.collage = "COLLAGE"
        msgs = build_text_messages("saucer", self.VOCAB, rec)
        texts = _texts(msgs)
        assert "Composite reference image from the web." in texts
        assert "Top-scoring evidence crop from the original image." in texts
        assert "Image/scene keywords: flat, shallow" in texts

    def test_snippets_turn(self):
        msgs = build_text_messages("moutai", self.VOCAB, record=None,
                                   snippets=["a liquor brand"])
        assert "External brief (web/Wikipedia):\na liquor brand" in _texts(msgs)

    def test_runtime_budget(self):
        import time
        t0 = time.perf_counter()
        for _ in range(50):
            build_text_messages("saucer", self.VOCAB, record=None)
            build_vision_messages("saucer", "C", "I")
            build_planner_prompt(Instruction("t"))
        assert time.perf_counter() - t0 < 1.0
