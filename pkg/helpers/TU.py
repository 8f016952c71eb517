#!/bin/python
# -*- coding: utf-8 -*-

import os
import json
import logging
import numpy as np

logger = logging.getLogger('icepool.TU')


class TU:
    # cf. https://chrsmrrs.github.io/datasets/docs/format/

    def __init__(self, the_name: str):

        self.name = the_name
        self.graphs = []

        self._graphs_dict = {}
        self._num_nodes = 0

        return None


    def graph(self,
              the_adjacency,
              the_label: int,
              the_node_labels=None,
              the_name: str=None,
              the_id: int=None):

        adjacency = np.asarray(the_adjacency)

        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise Exception("adjacency must be a square matrix")

        # both directions of every undirected edge, as the TU convention lists them
        src, dst = np.nonzero(adjacency)

        _graph = {
            "num_nodes": adjacency.shape[0],
            "edges": list(zip(src.tolist(), dst.tolist())),
            "label": int(the_label),
        }

        if the_node_labels is not None:
            if len(the_node_labels) != adjacency.shape[0]:
                raise Exception("one node label per node is expected")
            _graph['node_labels'] = [int(x) for x in the_node_labels]

        if the_name != None:
            _graph['name'] = the_name

        if the_id != None:
            _graph['id'] = the_id

        return _graph


    def insert_graph(self, the_graph):

        if len(self.graphs) > 0 and ('node_labels' in the_graph) != ('node_labels' in self.graphs[0]):
            raise Exception("either all graphs or none carry node labels")

        if 'id' not in the_graph:
            the_graph['id'] = len(self.graphs) + 1

        if the_graph['id'] in self._graphs_dict:
            raise Exception("duplicate graph id")

        # global, 1-based id of this graph's first node
        the_graph['first_node'] = self._num_nodes + 1
        self._num_nodes += the_graph['num_nodes']

        self.graphs.append(the_graph)
        self._graphs_dict[the_graph['id']] = the_graph

        return the_graph['id']


    def write(self, the_path: str):

        if not os.path.exists(the_path):
            os.makedirs(the_path)

        written_files = []

        def _write_lines(suffix, lines):
            filename = os.path.join(the_path, f'{self.name}_{suffix}.txt')
            with open(filename, 'w') as fp:
                fp.write(''.join(f'{line}\n' for line in lines))
            written_files.append(filename)

        _write_lines('A', [
            f"{g['first_node'] + s}, {g['first_node'] + d}" for g in self.graphs for (s, d) in g['edges']
        ])
        _write_lines('graph_indicator', [
            g['id'] for g in self.graphs for _ in range(g['num_nodes'])
        ])
        _write_lines('graph_labels', [g['label'] for g in self.graphs])

        if len(self.graphs) > 0 and 'node_labels' in self.graphs[0]:
            _write_lines('node_labels', [x for g in self.graphs for x in g['node_labels']])

        logger.debug(f"{len(self.graphs)} graphs written to {the_path}")

        return written_files


    def to_json(self):

        out = {}
        out['name'] = self.name
        out['num_graphs'] = len(self.graphs)
        out['num_nodes'] = self._num_nodes
        out['num_edges'] = sum(len(g['edges']) for g in self.graphs) // 2
        out['node_labelled'] = len(self.graphs) > 0 and 'node_labels' in self.graphs[0]

        return out


    def __str__(self):

        return json.dumps(self.to_json())

    def __repr__(self):

        return json.dumps(self.to_json())


if __name__ == '__main__':

    import tempfile
    from pprint import pprint

    tu = TU('TOY')

    triangle = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    path = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])

    tu.insert_graph(tu.graph(triangle, 0, the_node_labels=[0, 1, 1]))
    tu.insert_graph(tu.graph(path, 1, the_node_labels=[2, 0, 2]))

    try:
        tu.insert_graph(tu.graph(path, 1))
    except Exception as e:
        print(e)

    pprint(tu.to_json())
    pprint(tu.write(os.path.join(tempfile.mkdtemp(), 'TOY')))
