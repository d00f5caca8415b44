import time, sys
sys.path.insert(0, "/root/pkg/src")
import tbnet.graph as G
from tbnet.parser import parse_net
from tbnet.graph import BuildConfig

t0 = time.time()
orig = G._general_first
count = [0]
def wrapped(pending):
    count[0] += 1
    if count[0] % 10 == 0:
        print(f"level {count[0]}: {len(pending)} cands t={time.time()-t0:.0f}s", flush=True)
    return orig(pending)
G._general_first = wrapped
net = parse_net(open("/root/pkg/tests/fixtures/gasburner_05.tb").read())
g = G.build_graph(net, BuildConfig(ta_enabled=True, time_limit=net.time_limit, max_states=8000))
print(f"DONE: {len(g.nodes)} nodes capped={g.capped} {time.time()-t0:.1f}s", flush=True)
print("not_expanded:", sum(1 for n in g.nodes if n.not_expanded), flush=True)
maxconc = max((len(n.state.bag("Conc")) for n in g.nodes), default=0)
print("max #Conc:", maxconc, flush=True)
