import time, sys
sys.path.insert(0, "/root/pkg/src")
from tbnet.parser import parse_net
from tbnet.graph import BuildConfig, build_graph
for name in ("gasburner_05", "gasburner_025"):
    net = parse_net(open(f"/root/pkg/tests/fixtures/{name}.tb").read())
    t0 = time.time()
    g = build_graph(net, BuildConfig(ta_enabled=True, time_limit=net.time_limit, max_states=20000))
    maxconc = max((len(n.state.bag("Conc")) for n in g.nodes), default=0)
    burn = sum(1 for n in g.nodes if n.state.bag("BURN_PHASE_S"))
    print(f"{name}: {len(g.nodes)} nodes capped={g.capped} "
          f"noexp={sum(1 for n in g.nodes if n.not_expanded)} "
          f"maxConc={maxconc} burn_states={burn} {time.time()-t0:.1f}s", flush=True)
