"""Low-level reasoning task generation, prompting, and evaluation."""

from .generators import (
    TaskInstance,
    gen_angle_task,
    gen_length_task,
    gen_maze_task,
    generate_task_set,
)
from .geoclidean import GeoProgram, interpret, parse_program
from .maze import MazeSpec, eval_maze, eval_maze_explain, generate_maze, solve_maze
from .prompts import assemble_prompt, load_template, template_for_task
from .reasoner import (
    EndpointConfig,
    OfflineFixtures,
    normalize_answer,
    query_reasoner,
    score_answers,
)
