"""
MCP Server for Chuk Grounding.

Provides tools to inspect presets, evaluate the alignment weights, run the
gradient suite, generate datasets and evaluate checkpoints.
"""

import json
from typing import Any

from mcp.server import Server
from mcp.types import TextContent, Tool

from chuk_grounding.config import get_preset, list_presets, load_model_file
from chuk_grounding.data import (
    SceneSpec,
    generate_dataset,
    load_dataset,
    save_dataset,
    split_counts,
)
from chuk_grounding.losses import w_dice, w_focal
from chuk_grounding.pipeline import evaluate, gradcheck_suite, load_checkpoint

# Initialize MCP server
server = Server("chuk-grounding")


@server.list_tools()
async def list_tools() -> list[Tool]:
    """List available MCP tools."""
    return [
        Tool(
            name="list_presets",
            description="List the available run configuration presets",
            inputSchema={
                "type": "object",
                "properties": {},
                "required": [],
            },
        ),
        Tool(
            name="get_preset",
            description="Get a complete run configuration preset",
            inputSchema={
                "type": "object",
                "properties": {
                    "name": {
                        "type": "string",
                        "description": "Preset name (desk, paper-scale, toy)",
                    }
                },
                "required": ["name"],
            },
        ),
        Tool(
            name="asa_weights",
            description=(
                "Alignment quality weights: the focal weight of each query-mask probability "
                "and the dice weight of a set of selected superpoint centers"
            ),
            inputSchema={
                "type": "object",
                "properties": {
                    "probabilities": {
                        "type": "array",
                        "items": {"type": "number"},
                        "description": "Query-mask probabilities in [0, 1]",
                    },
                    "centers": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "number"}},
                        "description": "Selected superpoint centers as [x, y, z] rows",
                    },
                    "preset": {
                        "type": "string",
                        "description": "Preset whose constants to use (default: desk)",
                    },
                },
                "required": [],
            },
        ),
        Tool(
            name="gradcheck",
            description="Run the finite-difference gradient suite and summarise the results",
            inputSchema={
                "type": "object",
                "properties": {
                    "preset": {
                        "type": "string",
                        "description": "Preset to check (default: toy)",
                    }
                },
                "required": [],
            },
        ),
        Tool(
            name="generate_dataset",
            description="Generate a synthetic referring dataset and write it as JSON Lines",
            inputSchema={
                "type": "object",
                "properties": {
                    "out": {"type": "string", "description": "Output JSONL path"},
                    "spec": {"type": "string", "description": "Scene spec file (optional)"},
                    "seed": {"type": "integer", "description": "Base seed (optional)"},
                    "count": {"type": "integer", "description": "Sample count (optional)"},
                },
                "required": ["out"],
            },
        ),
        Tool(
            name="evaluate_checkpoint",
            description="Evaluate a checkpoint on a dataset and return the metrics report",
            inputSchema={
                "type": "object",
                "properties": {
                    "ckpt": {"type": "string", "description": "Checkpoint path"},
                    "data": {"type": "string", "description": "Dataset JSONL path"},
                    "hide_object_name": {
                        "type": "boolean",
                        "description": "Replace the shape word with 'object'",
                    },
                },
                "required": ["ckpt", "data"],
            },
        ),
    ]


@server.call_tool()
async def call_tool(name: str, arguments: Any) -> list[TextContent]:
    """Handle tool calls."""
    arguments = arguments or {}
    try:
        if name == "list_presets":
            return [TextContent(type="text", text=json.dumps(list_presets(), indent=2))]

        elif name == "get_preset":
            preset = get_preset(arguments["name"])
            return [TextContent(type="text", text=preset.model_dump_json(indent=2))]

        elif name == "asa_weights":
            asa = get_preset(arguments.get("preset", "desk")).asa
            probabilities = arguments.get("probabilities", [])
            centers = arguments.get("centers", [])
            result = {
                "w_focal": w_focal(probabilities, asa).tolist() if probabilities else [],
                "w_dice": w_dice([1.0] * len(centers), centers) if centers else 1.0,
            }
            return [TextContent(type="text", text=json.dumps(result, indent=2))]

        elif name == "gradcheck":
            report = gradcheck_suite(get_preset(arguments.get("preset", "toy")))
            summary = {
                "passed": report.passed,
                "seconds": round(report.seconds, 2),
                "checks": {check.name: check.max_rel_error for check in report.checks},
                "failures": [check.name for check in report.failures()],
            }
            return [TextContent(type="text", text=json.dumps(summary, indent=2))]

        elif name == "generate_dataset":
            spec = SceneSpec()
            if arguments.get("spec"):
                spec = load_model_file(arguments["spec"], spec)
            samples = generate_dataset(
                spec, seed=arguments.get("seed"), count=arguments.get("count")
            )
            written = save_dataset(samples, arguments["out"])
            result = {"path": arguments["out"], "count": written, "splits": split_counts(samples)}
            return [TextContent(type="text", text=json.dumps(result, indent=2))]

        elif name == "evaluate_checkpoint":
            checkpoint = load_checkpoint(arguments["ckpt"])
            samples = load_dataset(arguments["data"])
            report, _ = evaluate(
                checkpoint, samples, hide_object_name=bool(arguments.get("hide_object_name"))
            )
            return [TextContent(type="text", text=report.model_dump_json(indent=2))]

        else:
            return [TextContent(type="text", text=f"Unknown tool: {name}")]

    except Exception as e:
        error_msg = f"Error executing {name}: {str(e)}"
        return [TextContent(type="text", text=error_msg)]


async def main() -> None:
    """Run the MCP server."""
    from mcp.server.stdio import stdio_server

    async with stdio_server() as (read_stream, write_stream):
        await server.run(
            read_stream,
            write_stream,
            server.create_initialization_options(),
        )


if __name__ == "__main__":
    import asyncio

    asyncio.run(main())
