"""Pure numpy/python tick kernel: the reference semantics.

Vectorizes the common case (agents advancing within one edge) and
handles the rare transitions (spawns, lift service, edge crossings) in
plain loops. Float expressions match the numba kernel term for term so
traces are bit-identical across backends.
"""

from __future__ import annotations

import numpy as np

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

    def emit(t, agent, kind, edge, val):
        k = ev_n[0]
        ev_t[k] = t
        ev_agent[k] = agent
        ev_kind[k] = kind
        ev_edge[k] = edge
        ev_val[k] = val
        ev_n[0] = k + 1

    def base_speed(i, e):
        if e_kind[e] == KIND_LANE and a_type[i] <= 1:
            return e_ride_speed[e]
        return a_speed[i]

    def join_queue(i, e, now):
        a_status[i] = ST_QUEUED
        a_edge[i] = e
        a_join_t[i] = now
        a_qnext[i] = -1
        q = e_queue[e]
        if q_tail[q] < 0:
            q_head[q] = i
        else:
            a_qnext[q_tail[q]] = i
        q_tail[q] = i

    def arrive(i, now):
        a_status[i] = ST_ARRIVED
        a_arrive_t[i] = now
        emit(now, i, EV_ARRIVE, -1, now - a_depart[i])

    def enter_path(i, now):
        c = a_cursor[i]
        if c >= a_path_len[i]:
            if a_node[i] == a_dest[i]:
                arrive(i, now)
            else:
                a_status[i] = ST_DECIDING
            return
        e = path_buf[i, c]
        if e_kind[e] == KIND_CONNECTOR and a_type[i] != 3:
            join_queue(i, e, now)
        else:
            a_status[i] = ST_MOVING
            a_edge[i] = e
            a_pos[i] = 0.0
            a_enter_t[i] = now

    for it in range(n_ticks):
        t = t0 + it * dt

        # P0: spawn activations
        while sp_cursor[0] < n_spawn:
            i = int(spawn_order[sp_cursor[0]])
            if a_depart[i] > t:
                break
            sp_cursor[0] += 1
            a_status[i] = ST_DECIDING
            a_node[i] = a_origin[i]
            emit(t, i, EV_DEPART, -1, 0.0)

        # P0b: fresh plans enter the network
        ready = np.flatnonzero((a_status == ST_DECIDING) & (a_plan_ready == 1))
        for i in ready:
            a_plan_ready[i] = 0
            enter_path(int(i), t)

        # P1: completed lift rides exit
        due = np.flatnonzero((a_status == ST_RIDING) & (a_ride_until <= t))
        for i in due:
            i = int(i)
            tt = a_ride_until[i]
            q = a_ride_q[i]
            delay = tt - a_join_t[i]
            a_dur[i, KIND_CONNECTOR] += tt - a_ride_t0[i]
            q_delay_sum[q] += delay
            q_delay_n[q] += 1
            emit(tt, i, EV_LIFT_RIDE, a_edge[i], delay)
            chain = a_ride_exit_cursor[i] - a_cursor[i]
            a_ffcost[i] += NOMINAL_LIFT_S + CHAIN_STEP_S * (chain - 1)
            a_node[i] = a_ride_exit_node[i]
            a_cursor[i] = a_ride_exit_cursor[i]
            enter_path(i, t)

        # P2: idle cars serve queues
        for q in range(n_queues):
            if q_busy[q] > t or q_head[q] < 0:
                continue
            served = 0
            while served < q_cap[q] and q_head[q] >= 0:
                i = int(q_head[q])
                q_head[q] = a_qnext[i]
                if q_head[q] < 0:
                    q_tail[q] = -1
                a_qnext[i] = -1
                if a_status[i] != ST_QUEUED or e_queue[a_edge[i]] != q:
                    continue  # left the queue since joining
                wait = t - a_join_t[i]
                a_wait_s[i] += wait
                emit(t, i, EV_LIFT_WAIT, a_edge[i], wait)
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
        moving = np.flatnonzero(a_status == ST_MOVING)
        if moving.size:
            edges = a_edge[moving]
            sig = e_sat[edges]
            fac = np.maximum(SAT_FLOOR, 1.0 - sig)
            own = a_speed[moving]
            lane_ride = (e_kind[edges] == KIND_LANE) & (a_type[moving] <= 1)
            v = np.where(lane_ride, e_ride_speed[edges], own) * fac
            need = (e_len[edges] - a_pos[moving]) / v
            stay = need > dt
            idx_stay = moving[stay]
            if idx_stay.size:
                v_stay = v[stay]
                a_pos[idx_stay] += v_stay * dt
                a_satexp[idx_stay] += sig[stay] * dt
                ek = e_kind[a_edge[idx_stay]]
                a_dur[idx_stay, ek] += dt
                wmask = (ek == KIND_CORRIDOR) & (a_type[idx_stay] <= 1)
                if wmask.any():
                    a_dist_walk[idx_stay[wmask]] += v_stay[wmask] * dt
            for i in moving[~stay]:
                i = int(i)
                tau = dt
                while True:
                    e = a_edge[i]
                    sg = e_sat[e]
                    f = max(SAT_FLOOR, 1.0 - sg)
                    vb = base_speed(i, e)
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
                    emit(now, i, EV_MOVE, e, 0.0)
                    a_node[i] = e_to[e]
                    a_cursor[i] += 1
                    if a_cursor[i] >= a_path_len[i]:
                        if a_node[i] == a_dest[i]:
                            arrive(i, now)
                        else:
                            a_status[i] = ST_DECIDING
                        break
                    e2 = path_buf[i, a_cursor[i]]
                    if e_kind[e2] == KIND_CONNECTOR and a_type[i] != 3:
                        join_queue(i, e2, now)
                        break
                    a_edge[i] = e2
                    a_pos[i] = 0.0
                    a_enter_t[i] = now
                    if tau <= 0.0:
                        break

        # P4: loads and saturation
        e_load[:] = 0.0
        active = np.flatnonzero(
            (a_status == ST_MOVING) | (a_status == ST_QUEUED) | (a_status == ST_RIDING)
        )
        if active.size:
            np.add.at(e_load, a_edge[active], type_load_w[a_type[active]])
        np.minimum(1.0, e_load / e_cap, out=e_sat)

        # P5: accumulators
        onnet = np.flatnonzero(
            (a_status >= ST_DECIDING) & (a_status <= ST_RIDING)
        )
        acc_onnet[0] += onnet.size * dt
        if onnet.size > acc_peak[0]:
            acc_peak[0] = onnet.size
        acc_loadsec += e_load * dt
        acc_satsec += e_sat * dt
        if onnet.size:
            b = min(int(t // bin_len), occ.shape[0] - 1)
            nodes = np.where(
                a_status[onnet] == ST_DECIDING, a_node[onnet], e_from[a_edge[onnet]]
            )
            np.add.at(occ[b], nodes, dt)

    return None
