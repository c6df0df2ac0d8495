"""Prompt construction for the planner, verifier, and understanding models.

All templates are frozen strings; goldens in the test suite pin their exact
wording, so edit with care.
"""

from __future__ import annotations


PLANNER_TEMPLATE = """\
You are a planning assistant for a fixed robotic arm. Your goal is to break down a high-level task into a sequence of **essential high-level commands**, suitable for a capable Vision-Language-Action (VLA) model to execute directly.

Output Format:
Generate a numbered list of commands. Each command should represent a significant action achieving a clear sub-goal. Stick to the allowed high-level actions.

Example Plan Format (Use **exactly** this level of granularity):
Plan for the robot arm:

Goal: <original instruction>
1. pick up the <object_name_1> /(<object_name_1>)/
2. place the <object_name_1> in the <target_location> /(<object_name_1>,<target_location>)/
3. pick up the <object_name_2> /(<object_name_2>)/
4. place the <object_name_2> in the <target_location> /(<object_name_2>,<target_location>)/

--- Example for a different task ---
Goal: Put the apple in the red bowl
1. pick up the apple /(apple)/
2. place the apple in the red bowl /(apple, red bowl)/

--- Example for another task ---
Goal: Put the cup in the microwave and close it
1. pick up the cup /(cup)/
2. place the cup in the microwave /(cup, microwave)/
3. close the microwave /(microwave)/

--- Example for another task ---
Goal: Turn on the stove and put the pot on it
1. turn on the stove /(stove)/
2. pick up the pot /(pot)/
3. place the pot on the stove /(pot, stove)/

--- Example for another task ---
Goal: Put both books on the bookshelf
1. pick up the red book /(red book)/
2. place the red book on the bookshelf /(red book, bookshelf)/
3. pick up the brown book /(brown book)/
4. place the brown book on the bookshelf /(brown book, bookshelf)/

--- Example for another task ---
Goal: pick the red book near the butter and the brown book on the plate and put them on the left bookshelf
1. pick up the red book near the butter /(red book)/
2. place the red book near the butter on the left bookshelf /(red book, bookshelf)/
3. pick up the brown book on the plate /(brown book)/
4. place the brown book on the plate on the left bookshelf /(brown book, bookshelf)/

--- Example for another task ---
Goal: pick up the yellow and white mug next to the cookie box and place it on the plate
1. pick up the yellow and white mug next to the cookie box /(yellow and white mug)/
2. place the yellow and white mug next to the cookie box on the plate /(yellow and white mug, plate)/

--- Example for another task ---
Goal: put the black bowl in the bottom drawer of the cabinet and close it
1. pick up the black bowl /(black bowl)/
2. place the black bowl in the bottom drawer of the cabinet /(black bowl, cabinet)/
3. close the bottom drawer of the cabinet /(cabinet)/

Instructions:
- Generate **only** high-level commands. 
- Your output should be in the ***ABSOLUTELY SAME format*** as the example above. Even with unseen tasks, follow the same structure. ***WITHOUT ANY OTHER ANALYSIS and DESCRIPTION***.
- **After each command**, include a comment with the object names and locations in */()/*. This is necessary for the VLA model to understand which objects are involved in each command.
- DO NOT include any descriptions of position and order in */()/* (e.g., "first pot", "back of the shelf", "bottom of sth", "upper of sth"), only color and shape are permitted (e.g., "red bowl", "cylindrical box").
    But you should maintain the details of the objects and locations as described in the task to subtask, such as "red bowl near the plate", "brown book on the cabinet", "left bookshelf", "black bowl next to the cookie box", etc.
- **ONLY USE */()/* to EXPRESS *OBJECTS*.** Comments, explanations, and anything else that has nothing to do with expressing objects are not allowed.
- When an object or location has a qualifying modifier, such as a cabinet's drawer, door of a microwave, or the handle of pot, what you are expected to display in the /()/ is actually the **largest specific items these expressions** refer to, which are cabinets, microwaves, and pots, not the parts or subordinate items on these items that belong to these items.
    Meanwhile, you should still maintain the detailed expression in the subtask as "the drawer of the cabinet", "the door of the microwave" (eg. pick up the bottle on the stove; pick up the bowl in the drawer).
- **Allowed commands are strictly limited to:**
    - `pick up [object]`
    - `place [object] on [location]`
    - `place [object] in [location]`
    - `open [object/container/drawer/cabinet/etc.]`
    - `close [object/container/drawer/cabinet/etc.]`
    - `turn on [device]`
    - `turn off [device]`
- Use the commands above **only when necessary** to achieve the goal. Most tasks will primarily use `pick up` and `place`.
- **Explicitly DO NOT include separate steps for:**
    - `locate` (Assume VLA finds the object as part of executing the command)
    - `move to` or `move towards` (Assume the command includes necessary travel)
    - `lift`, `lower`, `grasp`, `release`, `push`, `pull`, `rotate`, `adjust` (Assume high-level commands handle these internally)
- **Assume the VLA model handles all implicit actions:**
    - "pick up [object]" means: Find the object, navigate to it, grasp it securely, and lift it.
    - "place [object] in [location]" means: Transport the object to the location, position it correctly, and release the grasp.
    - "open/close [container]" means: Find the handle/seam, interact with it appropriately (pull, slide, lift) to change the container's state.
    - "turn on/off [device]" means: Find the correct button/switch, interact with it to change the device's power state.
- Use the descriptive names from the task description and **DO NOT make any distortions** in subtasks (e.g., if the task involves {inlist}, make sure the subtasks about them are exactly the same).
- Generate the minimal sequence of these high-level commands required to fulfill the Goal. Ensure the sequence logically achieves the task (e.g., you might need to `open` a drawer before `placing something inside it, even if 'open' isn't explicitly stated in the goal).
- Additional INFO:{additional_info}
Task: {task_description}
Output:
"""

VISION_KEYWORDS_TEMPLATE = """\
    You are an intelligent assistant specialized in analyzing images and extracting meaningful information. Your task is to identify a specific person or object that appears in all provided images and generate five of the most relevant keywords to describe this person or object.
    **Think in ten sentences.** You must follow this rule strictly.
    Guidelines:
    For the combined image:
    If the same person appears in all images:
    Focus on describing the person's gender, skin tone, and occupation.
    Avoid keywords related to clothing or environment.
    Example keywords might include: "female", "light-skinned", "doctor", etc.
    If the same object appears in all images:
    Focus on describing the object's physical characteristics.
    Example keywords might include: "round", "metallic", "small", etc.
    **IMPORTANT** The keywords are going to help another Model to find the same or almost like subjects or persons in the real-world image.
    Thus the keywords should be very specific and descriptive, not general or abstract, and can reflect the basic attributes of this task or thing.
    Making another VLM easily find the same or similar subjects or persons in the real-world image.

    For the current image:
    There is something suitable for the query"{query}", but the model can't find the bbox exactly.
    Your mission is to base on the current image and the combined image to describe the same thing in both.
    
    Output Format:
    Output the keywords in JSON format.
    Ensure the output contains only the keywords, without additional text or explanation.
    The JSON structure should be a list of strings.
    Example JSON Output: ["female", "light-skinned", "doctor", "middle-aged", "smiling"].
    Your output should be in a format that the code below can easily extract the keywords:
    --match = re.search(r"\[.*?\]", output_text[0])
    --  if match:
    --      str_list = json.loads(match.group(0))
    --      print(str_list)

    Task:
    Analyze the provided images and generate five keywords that best describe the identified person or object based on the guidelines above. 
    Output the keywords in the specified JSON format.
    input:{query}
    output:"""

# additional_info branch selected by the parse status of the previous attempt
ADDITIONAL_INFO = {
    "success": "You are doing a good job, keep it up",
    "no subtask found": (
        "PAY MORE ATTENTION TO THE SUBTASKS in your last output, no valid subtask "
        "found. You should output the subtask in the same format as the example, "
        "without any other analysis or description."
    ),
    "no objects found": (
        "PAY MORE ATTENTION TO THE OBJECTS in your last output, no valid objects "
        "found in /(here)/. You should output the objects in the same format as the "
        "example, without any other analysis or description."
    ),
    "no subtask or objects": (
        "PAY MORE ATTENTION TO THE SUBTASKS and OBJECTS in your last output, no "
        "valid subtask or objects found. You should output the subtask and objects "
        "in the same format as the example, without any other analysis or "
        "description."
    ),
}

VERIFIER_PREFIX = (
    "Observe the inputs (two videos or two image-flow videos). "
    "The subtask robot arm is currently working on: '{subtask}'. "
)

VERIFIER_STATE_ACTION_TEXT = {
    "turn on": "turned on (powered up)",
    "turn off": "turned off (powered down)",
    "open": "fully opened",
    "close": "fully closed",
}

TEXT_SYSTEM_STEER = (
    "You normalize open-world object mentions to a closed training vocabulary. "
    "Return EXACTLY ONE label copied verbatim from the allowed list below, "
    "or output NONE if no label applies."
)

TEXT_STRICT_CONSTRAINTS = (
    "STRICT CONSTRAINTS:\n"
    "- Output MUST be exactly one label copied verbatim from the allowed vocabulary above, "
    "or the token NONE when no label applies.\n"
    "- DO NOT include any analysis, explanation, reasoning, or additional text.\n"
    "- Format your final decision ONLY as:\n"
    "  <answer>LABEL_OR_NONE</answer>\n"
    "- LABEL_OR_NONE must be one of the allowed labels or NONE."
)
