"""Shared constants for the tick kernels.

Both kernel backends implement the same per-tick phase order:

  P0  activate agents whose departure time has come
  P0b agents holding a fresh plan enter their first edge
  P1  lift rides that finished exit and continue their path
  P2  idle lift cars serve their queues (merged FIFO per column+direction)
  P3  moving agents advance; edge crossings carry leftover tick time
  P4  edge loads are recounted and saturation updated
  P5  accumulators (loads, saturation, occupancy, on-network count)

Every phase iterates in ascending id order so the two backends emit
bit-identical event streams.
"""

ST_UNSPAWNED = 0
ST_DECIDING = 1
ST_MOVING = 2
ST_QUEUED = 3
ST_RIDING = 4
ST_ARRIVED = 5
ST_ABORTED = 6

EV_DEPART = 0
EV_MOVE = 1
EV_LIFT_WAIT = 2
EV_LIFT_RIDE = 3
EV_ARRIVE = 4
EV_ABORT = 5

EVENT_NAMES = {
    EV_DEPART: "depart",
    EV_MOVE: "move",
    EV_LIFT_WAIT: "lift_wait",
    EV_LIFT_RIDE: "lift_ride",
    EV_ARRIVE: "arrive",
    EV_ABORT: "abort",
}

KIND_CORRIDOR = 0
KIND_CONNECTOR = 1
KIND_LANE = 2
KIND_DRONE = 3

SAT_FLOOR = 0.1

# Planner prior for one lift transfer and the per-extra-level increment.
# graph.py re-exports these; kernels price realized chains with them.
NOMINAL_LIFT_S = 35.0
CHAIN_STEP_S = 1.0
