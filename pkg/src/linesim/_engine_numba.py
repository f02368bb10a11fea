"""numba build of the tick kernel. Mirrors _engine_numpy.run_chunk.

Phase order, iteration order, and every float expression must match the
numpy reference so both backends emit bit-identical traces.
"""

import numpy as np
from numba import njit

from ._engine_common import (
    CHAIN_STEP_S,
    EV_ARRIVE,
    EV_DEPART,
    EV_LIFT_RIDE,
    EV_LIFT_WAIT,
    EV_MOVE,
    KIND_CONNECTOR,
    KIND_CORRIDOR,
    KIND_LANE,
    NOMINAL_LIFT_S,
    SAT_FLOOR,
    ST_ARRIVED,
    ST_DECIDING,
    ST_MOVING,
    ST_QUEUED,
    ST_RIDING,
)


@njit(cache=True)
def _emit(ev_t, ev_agent, ev_kind, ev_edge, ev_val, ev_n, t, agent, kind, edge, val):
    k = ev_n[0]
    ev_t[k] = t
    ev_agent[k] = agent
    ev_kind[k] = kind
    ev_edge[k] = edge
    ev_val[k] = val
    ev_n[0] = k + 1


@njit(cache=True)
def run_chunk(
    t0, n_ticks, dt,
    e_from, e_to, e_len, e_cap, e_kind, e_ride_speed, e_queue, e_column, e_vdir, e_sat, e_load,
    a_type, a_speed, a_origin, a_dest, a_depart,
    a_status, a_node, a_edge, a_pos, a_enter_t,
    path_buf, a_path_len, a_cursor, a_plan_ready,
    a_join_t, a_ride_until, a_ride_exit_node, a_ride_exit_cursor, a_ride_q, a_ride_t0,
    a_dist_walk, a_wait_s, a_satexp, a_dur, a_arrive_t, a_ffcost,
    spawn_order, sp_cursor,
    q_head, q_tail, a_qnext, q_busy, q_service, q_cap, q_delay_sum, q_delay_n,
    type_load_w,
    ev_t, ev_agent, ev_kind, ev_edge, ev_val, ev_n,
    acc_loadsec, acc_satsec, acc_onnet, acc_peak,
    occ, bin_len,
    edge_ratio_sum, edge_ratio_n,
):
    n_agents = a_status.shape[0]
    n_edges = e_from.shape[0]
    n_queues = q_head.shape[0]
    n_spawn = spawn_order.shape[0]
    n_bins = occ.shape[0]

    for it in range(n_ticks):
        t = t0 + it * dt

        # P0: spawn activations
        while sp_cursor[0] < n_spawn:
            i = spawn_order[sp_cursor[0]]
            if a_depart[i] > t:
                break
            sp_cursor[0] += 1
            a_status[i] = ST_DECIDING
            a_node[i] = a_origin[i]
            _emit(ev_t, ev_agent, ev_kind, ev_edge, ev_val, ev_n, t, i, EV_DEPART, -1, 0.0)

        # P0b: fresh plans enter the network
        for i in range(n_agents):
            if a_status[i] == ST_DECIDING and a_plan_ready[i] == 1:
                a_plan_ready[i] = 0
                c = a_cursor[i]
                if c >= a_path_len[i]:
                    if a_node[i] == a_dest[i]:
                        a_status[i] = ST_ARRIVED
                        a_arrive_t[i] = t
                        _emit(ev_t, ev_agent, ev_kind, ev_edge, ev_val, ev_n,
                              t, i, EV_ARRIVE, -1, t - a_depart[i])
                    continue
                e = path_buf[i, c]
                if e_kind[e] == KIND_CONNECTOR and a_type[i] != 3:
                    a_status[i] = ST_QUEUED
                    a_edge[i] = e
                    a_join_t[i] = t
                    a_qnext[i] = -1
                    q = e_queue[e]
                    if q_tail[q] < 0:
                        q_head[q] = i
                    else:
                        a_qnext[q_tail[q]] = i
                    q_tail[q] = i
                else:
                    a_status[i] = ST_MOVING
                    a_edge[i] = e
                    a_pos[i] = 0.0
                    a_enter_t[i] = t

        # P1: completed lift rides exit
        for i in range(n_agents):
            if a_status[i] == ST_RIDING and a_ride_until[i] <= t:
                tt = a_ride_until[i]
                q = a_ride_q[i]
                delay = tt - a_join_t[i]
                a_dur[i, KIND_CONNECTOR] += tt - a_ride_t0[i]
                q_delay_sum[q] += delay
                q_delay_n[q] += 1
                _emit(ev_t, ev_agent, ev_kind, ev_edge, ev_val, ev_n,
                      tt, i, EV_LIFT_RIDE, a_edge[i], delay)
                chain = a_ride_exit_cursor[i] - a_cursor[i]
                a_ffcost[i] += NOMINAL_LIFT_S + CHAIN_STEP_S * (chain - 1)
                a_node[i] = a_ride_exit_node[i]
                a_cursor[i] = a_ride_exit_cursor[i]
                c = a_cursor[i]
                if c >= a_path_len[i]:
                    if a_node[i] == a_dest[i]:
                        a_status[i] = ST_ARRIVED
                        a_arrive_t[i] = t
                        _emit(ev_t, ev_agent, ev_kind, ev_edge, ev_val, ev_n,
                              t, i, EV_ARRIVE, -1, t - a_depart[i])
                    else:
                        a_status[i] = ST_DECIDING
                    continue
                e = path_buf[i, c]
                if e_kind[e] == KIND_CONNECTOR and a_type[i] != 3:
                    a_status[i] = ST_QUEUED
                    a_edge[i] = e
                    a_join_t[i] = t
                    a_qnext[i] = -1
                    qq = e_queue[e]
                    if q_tail[qq] < 0:
                        q_head[qq] = i
                    else:
                        a_qnext[q_tail[qq]] = i
                    q_tail[qq] = i
                else:
                    a_status[i] = ST_MOVING
                    a_edge[i] = e
                    a_pos[i] = 0.0
                    a_enter_t[i] = t

        # P2: idle cars serve queues
        for q in range(n_queues):
            if q_busy[q] > t or q_head[q] < 0:
                continue
            served = 0
            while served < q_cap[q] and q_head[q] >= 0:
                i = q_head[q]
                q_head[q] = a_qnext[i]
                if q_head[q] < 0:
                    q_tail[q] = -1
                a_qnext[i] = -1
                if a_status[i] != ST_QUEUED or e_queue[a_edge[i]] != q:
                    continue
                wait = t - a_join_t[i]
                a_wait_s[i] += wait
                _emit(ev_t, ev_agent, ev_kind, ev_edge, ev_val, ev_n,
                      t, i, EV_LIFT_WAIT, a_edge[i], wait)
                c = a_cursor[i]
                e = path_buf[i, c]
                col = e_column[e]
                vd = e_vdir[e]
                exit_node = e_to[e]
                c2 = c + 1
                while c2 < a_path_len[i]:
                    e2 = path_buf[i, c2]
                    if e_kind[e2] == KIND_CONNECTOR and e_column[e2] == col and e_vdir[e2] == vd:
                        exit_node = e_to[e2]
                        c2 += 1
                    else:
                        break
                a_ride_exit_node[i] = exit_node
                a_ride_exit_cursor[i] = c2
                a_ride_q[i] = q
                a_ride_t0[i] = t
                a_ride_until[i] = t + q_service[q]
                a_status[i] = ST_RIDING
                served += 1
            if served > 0:
                q_busy[q] = t + q_service[q]

        # P3: movement
        for i in range(n_agents):
            if a_status[i] != ST_MOVING:
                continue
            tau = dt
            while True:
                e = a_edge[i]
                sg = e_sat[e]
                f = 1.0 - sg
                if f < SAT_FLOOR:
                    f = SAT_FLOOR
                if e_kind[e] == KIND_LANE and a_type[i] <= 1:
                    vb = e_ride_speed[e]
                else:
                    vb = a_speed[i]
                vv = vb * f
                nd = (e_len[e] - a_pos[i]) / vv
                if nd > tau:
                    a_pos[i] += vv * tau
                    a_satexp[i] += sg * tau
                    a_dur[i, e_kind[e]] += tau
                    if e_kind[e] == KIND_CORRIDOR and a_type[i] <= 1:
                        a_dist_walk[i] += vv * tau
                    break
                tau -= nd
                a_satexp[i] += sg * nd
                a_dur[i, e_kind[e]] += nd
                if e_kind[e] == KIND_CORRIDOR and a_type[i] <= 1:
                    a_dist_walk[i] += e_len[e] - a_pos[i]
                now = t + (dt - tau)
                tff = e_len[e] / vb
                if tff > 0:
                    edge_ratio_sum[e] += (now - a_enter_t[i]) / tff
                    edge_ratio_n[e] += 1
                a_ffcost[i] += tff
                _emit(ev_t, ev_agent, ev_kind, ev_edge, ev_val, ev_n,
                      now, i, EV_MOVE, e, 0.0)
                a_node[i] = e_to[e]
                a_cursor[i] += 1
                if a_cursor[i] >= a_path_len[i]:
                    if a_node[i] == a_dest[i]:
                        a_status[i] = ST_ARRIVED
                        a_arrive_t[i] = now
                        _emit(ev_t, ev_agent, ev_kind, ev_edge, ev_val, ev_n,
                              now, i, EV_ARRIVE, -1, now - a_depart[i])
                    else:
                        a_status[i] = ST_DECIDING
                    break
                e2 = path_buf[i, a_cursor[i]]
                if e_kind[e2] == KIND_CONNECTOR and a_type[i] != 3:
                    a_status[i] = ST_QUEUED
                    a_edge[i] = e2
                    a_join_t[i] = now
                    a_qnext[i] = -1
                    q = e_queue[e2]
                    if q_tail[q] < 0:
                        q_head[q] = i
                    else:
                        a_qnext[q_tail[q]] = i
                    q_tail[q] = i
                    break
                a_edge[i] = e2
                a_pos[i] = 0.0
                a_enter_t[i] = now
                if tau <= 0.0:
                    break

        # P4: loads and saturation
        for e in range(n_edges):
            e_load[e] = 0.0
        for i in range(n_agents):
            s = a_status[i]
            if s == ST_MOVING or s == ST_QUEUED or s == ST_RIDING:
                e_load[a_edge[i]] += type_load_w[a_type[i]]
        for e in range(n_edges):
            sat = e_load[e] / e_cap[e]
            e_sat[e] = 1.0 if sat > 1.0 else sat

        # P5: accumulators
        onnet = 0
        b = int(t // bin_len)
        if b > n_bins - 1:
            b = n_bins - 1
        for i in range(n_agents):
            s = a_status[i]
            if ST_DECIDING <= s <= ST_RIDING:
                onnet += 1
                if s == ST_DECIDING:
                    occ[b, a_node[i]] += dt
                else:
                    occ[b, e_from[a_edge[i]]] += dt
        acc_onnet[0] += onnet * dt
        if onnet > acc_peak[0]:
            acc_peak[0] = onnet
        for e in range(n_edges):
            acc_loadsec[e] += e_load[e] * dt
            acc_satsec[e] += e_sat[e] * dt

    return None
