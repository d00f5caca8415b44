import time, sys
sys.path.insert(0, "/root/pkg/src")
from tbnet.parser import parse_net
from tbnet.graph import BuildConfig, build_graph
t0 = time.time()
net = parse_net(open("/root/pkg/tests/fixtures/gasburner_025.tb").read())
g = build_graph(net, BuildConfig(ta_enabled=True, time_limit=net.time_limit, max_states=12000))
print(f"DONE: {len(g.nodes)} nodes capped={g.capped} {time.time()-t0:.1f}s", flush=True)
maxconc = max((len(n.state.bag("Conc")) for n in g.nodes), default=0)
print("max #Conc:", maxconc, flush=True)
