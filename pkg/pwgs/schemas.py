# JSON schemas for the files read and written by pwgs. Semantic checks (graph assumptions, vertex
# ranges) happen after schema validation.

graph_file = {
	'title' : 'pwgs Graph',
	'type' : 'object',
	'required' : [ 'n', 'edges' ],
	'properties' : {
		'n' : {
			'type' : 'integer',
			'minimum' : 0
		},
		'edges' : {
			'type' : 'array',
			'items' : {
				'type' : 'array',
				'items' : { 'type' : 'integer', 'minimum' : 0 },
				'minItems' : 2,
				'maxItems' : 2
			}
		}
	}
}

vertex_set_file = {
	'title' : 'pwgs Vertex Set',
	'type' : 'object',
	'required' : [ 'vertices' ],
	'properties' : {
		'vertices' : {
			'type' : 'array',
			'items' : { 'type' : 'integer', 'minimum' : 0 }
		}
	}
}

report_envelope = {
	'title' : 'pwgs Report',
	'type' : 'object',
	'required' : [ 'schema', 'manifest', 'result' ],
	'properties' : {
		'schema' : {
			'type' : 'integer',
			'const' : 1
		},
		'manifest' : {
			'type' : 'object',
			'required' : [ 'command', 'version', 'parameters' ]
		},
		'result' : {
			'type' : [ 'object', 'array' ]
		}
	}
}
