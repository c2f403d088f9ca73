"""
SDWTRACK MCP Server
Exposes the Riemann solver, shadow-wave closed forms and the front tracker as MCP tools
"""

import json
import logging
import sys
from typing import Any, Dict, List, Optional

from mcp.server.fastmcp import FastMCP

from convergence_analysis import check_uniform_bounds, conservation_ledger, run_level, snapshot
from fluid_states import FluidState
from riemann_solver import solve_riemann
from sdwtrack_config import RunConfig, apply_tolerance_override, parse_run_config
from sdwtrack_errors import SdwTrackError
from shadow_waves import SdwTrajectory, kind_for

# Configure logging
logging.basicConfig(level=logging.INFO, stream=sys.stderr)
logger = logging.getLogger(__name__)

# Create the MCP server instance that uv run mcp dev can find
mcp = FastMCP("SDWTRACK")

SERVER_CONFIG = {
    "name": "SDWTRACK",
    "version": "0.1.0",
    "description": "Shadow-wave front tracking for pressureless gas dynamics",
}


def _state(values: List[float]) -> FluidState:
    if len(values) not in (2, 3):
        raise ValueError("a state is [rho, u] or [rho, u, e]")
    return FluidState(rho=values[0], u=values[1], e=values[2] if len(values) == 3 else None)


# ============================================================================
# TOOLS
# ============================================================================

@mcp.tool()
def solve_riemann_problem(left: List[float], right: List[float]) -> Dict[str, Any]:
    """Solve the Riemann problem between [rho, u(, e)] states"""
    try:
        solution = solve_riemann(_state(left), _state(right))
        return {
            "status": "success",
            "kind": "none" if solution.is_zero_jump else solution.kind.value,
            "speed": solution.speed,
            "fan_edges": list(solution.fan_edges) if solution.fan_edges else None,
            "strength_rate": solution.strength_rate,
        }
    except (SdwTrackError, ValueError) as e:
        return {"status": "error", "message": f"Riemann problem rejected: {e}"}


@mcp.tool()
def shadow_wave_trajectory(left: List[float], right: List[float], gamma: float, c0: float,
                           times: List[float], birth_position: float = 0.0) -> Dict[str, Any]:
    """Strength, speed and position of a shadow wave born at t=0"""
    try:
        l, r = _state(left), _state(right)
        trajectory = SdwTrajectory(birth_time=0.0, birth_position=birth_position, gamma=gamma, c0=c0,
                                   left=l, right=r, kind=kind_for(l, r))
        rows = [{"t": t, "xi": trajectory.strength(t), "u_s": trajectory.speed(t),
                 "c": trajectory.position(t)} for t in times]
        return {"status": "success", "kind": trajectory.kind.value,
                "limit_speed": trajectory.limit_speed, "samples": rows}
    except (SdwTrackError, ValueError) as e:
        return {"status": "error", "message": f"Trajectory rejected: {e}"}


@mcp.tool()
def evolve_fronts(config_json: str, snapshot_time: Optional[float] = None) -> Dict[str, Any]:
    """Run the tracker for a JSON run configuration and summarize the result"""
    try:
        config = parse_run_config(config_json)
        config = config.model_copy(update={"tolerances": apply_tolerance_override(config.tolerances)})
        fan = run_level(config)
        ledger = conservation_ledger(fan, [0.0, config.t_end])
        bounds = check_uniform_bounds(fan, [config.t_end], config.initial_data)
        t = config.t_end if snapshot_time is None else snapshot_time
        shot = snapshot(fan, t)
        return {
            "status": "success",
            "events": len(fan.history),
            "fronts": len(fan.fronts),
            "conservation_error": max(row.worst for row in ledger),
            "bounds_ok": bounds.ok,
            "snapshot": {
                "t": t,
                "atoms": [{"x": a.x, "mass": a.mass, "momentum": a.momentum} for a in shot.atoms],
                "total_mass": shot.total_mass,
                "total_momentum": shot.total_momentum,
            },
        }
    except SdwTrackError as e:
        return {"status": "error", "message": f"Evolve failed: {e}"}


# ============================================================================
# RESOURCES
# ============================================================================

@mcp.resource("sdwtrack://config-schema")
def get_config_schema() -> str:
    """JSON schema of a run configuration"""
    return json.dumps(RunConfig.model_json_schema(), indent=2)


def initialize_server():
    """Print the startup banner"""
    print(f"🚀 {SERVER_CONFIG['name']} MCP Server Starting...", file=sys.stderr)
    print(f"   Version: {SERVER_CONFIG['version']}", file=sys.stderr)
    print("   Ready for connections!", file=sys.stderr)


if __name__ == "__main__":
    initialize_server()
    mcp.run()
