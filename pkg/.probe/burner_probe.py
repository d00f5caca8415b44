import time, sys
sys.path.insert(0, "/root/pkg/src")
import tbnet.graph as G
from tbnet.parser import parse_net
from tbnet.graph import BuildConfig

level_no = [0]
orig = G._general_first
t0 = time.time()
def wrapped(pending):
    out = orig(pending)
    level_no[0] += 1
    print(f"level {level_no[0]}: {len(pending)} candidates  t={time.time()-t0:.0f}s", flush=True)
    return out
G._general_first = wrapped

net = parse_net(open("/root/pkg/tests/fixtures/gasburner_05.tb").read())
g = G.build_graph(net, BuildConfig(ta_enabled=True, max_states=4000))
print(f"DONE: {len(g.nodes)} nodes capped={g.capped} {time.time()-t0:.1f}s", flush=True)
maxconc = max((len(n.state.bag("Conc")) for n in g.nodes), default=0)
print("max #Conc:", maxconc, flush=True)
for i, n in enumerate(g.nodes):
    if len(n.state.bag("Conc")) == maxconc:
        print("example:", n.state.pretty()[:260])
        break
